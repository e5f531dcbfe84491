#ifndef NETREG_COMMON_HPP
#define NETREG_COMMON_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace netreg {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DegenerateError : public Error {
public:
    using Error::Error;
};

class CapabilityError : public Error {
public:
    using Error::Error;
};

class SingularError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

inline long double binom(long double n, int k) {
    if (k < 0 || n < k) {
        return 0.0L;
    }
    long double out = 1.0L;
    for (int i = 0; i < k; ++i) {
        out = out * (n - i) / (i + 1);
    }
    return out;
}

inline std::int64_t binom_int(std::int64_t n, int k) {
    if (k < 0 || n < k) {
        return 0;
    }
    std::int64_t out = 1;
    for (int i = 0; i < k; ++i) {
        out = out * (n - i) / (i + 1);
    }
    return out;
}

inline std::int64_t factorial(int r) {
    std::int64_t out = 1;
    for (int i = 2; i <= r; ++i) {
        out *= i;
    }
    return out;
}

/* Neumaier compensated accumulator in extended precision. */
class Accumulator {
public:
    void add(long double x) {
        long double t = sum_ + x;
        if (std::fabs(sum_) >= std::fabs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    long double value() const { return sum_ + comp_; }

private:
    long double sum_ = 0.0L;
    long double comp_ = 0.0L;
};

inline int default_threads() {
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/* Static chunking; each index is visited exactly once so results written to
 * per-index slots do not depend on the thread count. */
inline void parallel_for(std::int64_t count, const std::function<void(std::int64_t)>& fn, int threads = 0) {
    if (threads <= 0) {
        threads = default_threads();
    }
    if (threads == 1 || count < 2) {
        for (std::int64_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    threads = static_cast<int>(std::min<std::int64_t>(threads, count));
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t]() {
            try {
                for (std::int64_t i = t; i < count; i += threads) {
                    fn(i);
                }
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}

#endif
