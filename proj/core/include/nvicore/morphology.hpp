#pragma once

#include <string>
#include <vector>

#include "nvicore/time_series.hpp"

namespace nvi {

// One trough-to-trough beat. peak_index points at the segment maximum.
struct BeatSegment {
    std::vector<double> samples;
    double fs = 0.0;
    std::size_t peak_index = 0;
};

// Ordered name -> value map with a fixed registry. A NaN value means the
// feature is flagged missing; names are unique.
class FeatureVector {
public:
    void set(const std::string& name, double value);
    void set_missing(const std::string& name);
    bool has(const std::string& name) const;       // present and finite
    double get(const std::string& name) const;     // throws DataError if absent
    const std::vector<std::pair<std::string, double>>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    void merge(const FeatureVector& other);

    // Fixed registries: 14 morphology, 7 frequency, 3 nonlinear slots.
    static const std::vector<std::string>& morph_registry();
    static const std::vector<std::string>& freq_registry();
    static const std::vector<std::string>& nonlinear_registry();

private:
    std::vector<std::pair<std::string, double>> items_;
};

// Trough-to-trough segmentation; troughs are the minima between consecutive
// peaks, partial first/last beats are dropped. Needs >= 3 peaks.
std::vector<BeatSegment> segment_beats(const TimeSeries& ppg, const PeakList& peaks);

// Per-beat morphology aggregated by median across beats (14 slots).
FeatureVector morph_features(const std::vector<BeatSegment>& beats);

// Welch-spectrum shape descriptors (7 slots). Needs >= 2 s of signal.
FeatureVector freq_features(const TimeSeries& ppg);

// sample_entropy(m=2, r=0.2*SD), DFA alpha and normalized permutation
// entropy (order 3, lag 1). Needs >= 200 samples.
FeatureVector nonlinear_features(const TimeSeries& ppg);

// Columns of a feature matrix, one named column per feature.
struct FeatureColumn {
    std::string name;
    std::vector<double> values;
};

// Mutual information of each feature against a binary label, estimated with
// equal-frequency bins (min(10, ceil(sqrt(n)))). Returns the top k feature
// names by descending MI, ties broken by name.
std::vector<std::string> mutual_info_rank(const std::vector<FeatureColumn>& features,
                                          const std::vector<int>& labels, std::size_t k);

// The per-feature MI scores behind mutual_info_rank, in ranked order.
std::vector<std::pair<std::string, double>> mutual_info_scores(
    const std::vector<FeatureColumn>& features, const std::vector<int>& labels);

} // namespace nvi
