#pragma once

#include <functional>

namespace drpg {

/// Worker count used by the data-parallel loops. Defaults to DRPG_THREADS
/// when set, otherwise 1. Results never depend on this value.
int thread_count();
void set_thread_count(int threads);

/// Runs body(i) for i in [0, n), splitting the range into contiguous chunks
/// across thread_count() workers. Callers must write disjoint outputs per i.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace drpg
