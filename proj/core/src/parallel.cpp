#include "maskscope/parallel.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <limits>
#include <string_view>
#include <thread>
#include <vector>

namespace maskscope {

std::size_t worker_count() {
    if (const char* env = std::getenv("MASKSCOPE_THREADS")) {
        std::string_view text(env);
        std::size_t value = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec == std::errc{} && ptr == text.data() + text.size() && value > 0) return value;
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    if (n == 0) return;
    const std::size_t workers = std::min(worker_count(), n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }

    struct Failure {
        std::size_t index = std::numeric_limits<std::size_t>::max();
        std::exception_ptr error;
    };
    std::vector<Failure> failures(workers);
    const std::size_t block = (n + workers - 1) / workers;
    {
        std::vector<std::jthread> threads;
        threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back([&, w] {
                const std::size_t begin = w * block;
                const std::size_t end = std::min(n, begin + block);
                for (std::size_t i = begin; i < end; ++i) {
                    try {
                        body(i);
                    } catch (...) {
                        failures[w] = {i, std::current_exception()};
                        return;
                    }
                }
            });
        }
    }
    auto first = std::min_element(failures.begin(), failures.end(),
                                  [](const Failure& a, const Failure& b) { return a.index < b.index; });
    if (first->error) std::rethrow_exception(first->error);
}

}  // namespace maskscope
