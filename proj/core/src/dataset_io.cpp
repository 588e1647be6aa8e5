#include "nvicore/dataset_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "nvicore/errors.hpp"

namespace nvi {

namespace {

std::string window_filename(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "win_%06zu.bin", index);
    return buf;
}

void write_window(const std::string& path, const LabeledWindow& win) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("save_dataset: cannot open " + path);
    f.write("NVIW", 4);
    const std::uint32_t version = 1;
    const std::uint32_t channels = kChannels;
    const std::uint64_t t = win.t;
    const std::uint8_t label = win.label ? 1 : 0;
    f.write(reinterpret_cast<const char*>(&version), sizeof(version));
    f.write(reinterpret_cast<const char*>(&channels), sizeof(channels));
    f.write(reinterpret_cast<const char*>(&t), sizeof(t));
    f.write(reinterpret_cast<const char*>(&label), sizeof(label));
    f.write(reinterpret_cast<const char*>(&win.nvi_target), sizeof(win.nvi_target));
    f.write(reinterpret_cast<const char*>(win.channels.data()),
            static_cast<std::streamsize>(win.channels.size() * sizeof(double)));
    if (!f) throw DataError("save_dataset: write failed for " + path);
}

LabeledWindow read_window(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("load_dataset: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "NVIW", 4) != 0) {
        throw DataError("load_dataset: bad magic in " + path);
    }
    std::uint32_t version = 0, channels = 0;
    std::uint64_t t = 0;
    std::uint8_t label = 0;
    f.read(reinterpret_cast<char*>(&version), sizeof(version));
    f.read(reinterpret_cast<char*>(&channels), sizeof(channels));
    f.read(reinterpret_cast<char*>(&t), sizeof(t));
    f.read(reinterpret_cast<char*>(&label), sizeof(label));
    if (version != 1 || channels != kChannels) {
        throw DataError("load_dataset: unsupported window format in " + path);
    }
    LabeledWindow win;
    win.t = t;
    win.label = label;
    f.read(reinterpret_cast<char*>(&win.nvi_target), sizeof(win.nvi_target));
    win.channels.resize(kChannels * t);
    f.read(reinterpret_cast<char*>(win.channels.data()),
           static_cast<std::streamsize>(win.channels.size() * sizeof(double)));
    if (!f) throw DataError("load_dataset: truncated window " + path);
    return win;
}

} // namespace

void save_dataset(const std::string& dir, const Dataset& dataset) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    nlohmann::json manifest{{"schema_version", 1},
                            {"n", dataset.windows.size()},
                            {"fs", dataset.fs},
                            {"duration_s", dataset.duration_s},
                            {"perturb_onset_s", dataset.perturb_onset_s},
                            {"seed", dataset.seed},
                            {"class_balance", dataset.class_balance},
                            {"noise_sd", dataset.noise_sd},
                            {"noise_scale", dataset.noise_scale},
                            {"split_indices",
                             {{"train", dataset.train_idx},
                              {"val", dataset.val_idx},
                              {"test", dataset.test_idx}}}};
    {
        std::ofstream f(fs::path(dir) / "manifest.json", std::ios::trunc);
        if (!f) throw DataError("save_dataset: cannot write manifest in " + dir);
        f << manifest.dump(2) << "\n";
    }
    for (std::size_t i = 0; i < dataset.windows.size(); ++i) {
        write_window((fs::path(dir) / window_filename(i)).string(), dataset.windows[i]);
    }
}

Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    std::ifstream f(fs::path(dir) / "manifest.json");
    if (!f) throw DataError("load_dataset: no manifest.json in " + dir);
    nlohmann::json manifest;
    f >> manifest;

    Dataset ds;
    const auto n = manifest.at("n").get<std::size_t>();
    ds.fs = manifest.at("fs").get<double>();
    ds.duration_s = manifest.at("duration_s").get<double>();
    ds.perturb_onset_s = manifest.at("perturb_onset_s").get<double>();
    ds.seed = manifest.at("seed").get<std::uint64_t>();
    ds.class_balance = manifest.at("class_balance").get<double>();
    const auto noise = manifest.at("noise_sd").get<std::vector<double>>();
    if (noise.size() != kChannels) throw DataError("load_dataset: bad noise_sd length");
    std::copy(noise.begin(), noise.end(), ds.noise_sd.begin());
    ds.noise_scale = manifest.at("noise_scale").get<double>();
    ds.train_idx = manifest.at("split_indices").at("train").get<std::vector<std::size_t>>();
    ds.val_idx = manifest.at("split_indices").at("val").get<std::vector<std::size_t>>();
    ds.test_idx = manifest.at("split_indices").at("test").get<std::vector<std::size_t>>();

    ds.windows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ds.windows.push_back(read_window((fs::path(dir) / window_filename(i)).string()));
    }
    return ds;
}

void export_window_csv(const std::string& path, const LabeledWindow& window, double fs) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("export_window_csv: cannot open " + path);
    f << "# label=" << window.label << " nvi_target=" << window.nvi_target << "\n";
    f << "t_s";
    for (std::size_t ch = 0; ch < kChannels; ++ch) f << "," << kChannelNames[ch];
    f << "\n";
    f.precision(12);
    for (std::size_t i = 0; i < window.t; ++i) {
        f << (static_cast<double>(i) / fs);
        for (std::size_t ch = 0; ch < kChannels; ++ch) {
            f << "," << window.channels[ch * window.t + i];
        }
        f << "\n";
    }
}

} // namespace nvi
