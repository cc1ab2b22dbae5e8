#include "drpg/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace drpg {
namespace {

int initial_threads()
{
    if (const char* env = std::getenv("DRPG_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1)
            return v;
    }
    return 1;
}

std::atomic<int>& threads_slot()
{
    static std::atomic<int> slot{initial_threads()};
    return slot;
}

}  // namespace

int thread_count()
{
    return threads_slot().load();
}

void set_thread_count(int threads)
{
    threads_slot().store(std::max(1, threads));
}

void parallel_for(int n, const std::function<void(int)>& body)
{
    const int workers = std::min(thread_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const int begin = n * w / workers;
        const int end = n * (w + 1) / workers;
        pool.emplace_back([&, begin, end] {
            try {
                for (int i = begin; i < end; ++i)
                    body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        });
    }
    pool.clear();
    if (failure)
        std::rethrow_exception(failure);
}

}  // namespace drpg
