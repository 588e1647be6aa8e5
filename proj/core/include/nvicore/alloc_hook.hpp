#pragma once

#include <cstdint>

// Global allocation counter backed by operator new/delete overrides. Link
// the nvi_alloc_hook target into a binary to activate it; the counter then
// covers every heap allocation in that binary, so a zero delta across a
// code region proves the region is allocation-free.
namespace nvi {

std::uint64_t allocation_count();

} // namespace nvi
