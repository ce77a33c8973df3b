#pragma once

// Replication fan-out and machine-readable output. Determinism contract:
// replication i always uses the stream derived from (seed, tag, i) and
// results are reduced in index order, so the worker count never shows up in
// the numbers or the bytes.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "random.hpp"

namespace blex {

template <typename Row, typename Fn>
std::vector<Row> replication_map(std::uint64_t replications, unsigned workers, std::uint64_t seed,
                                 std::string_view tag, Fn&& fn) {
    std::vector<Row> rows(replications);
    const std::uint64_t purpose = purpose_tag(tag);
    if (workers == 0) workers = 1;
    auto shard = [&rows, &fn, purpose, seed, replications, workers](unsigned w) {
        for (std::uint64_t i = w; i < replications; i += workers) {
            RandomStream rng(seed, purpose, i);
            rows[i] = fn(i, rng);
        }
    };
    if (workers == 1) {
        shard(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(shard, w);
        for (auto& th : pool) th.join();
    }
    return rows;
}

inline std::string format_value(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Comma-separated text: '#' comment lines (resolved config, summary stats),
// one header row, then data rows. All floats via %.17g; -inf spelled -inf.
class CsvWriter {
  public:
    void comment(const std::string& text) {
        std::size_t start = 0;
        while (start <= text.size()) {
            const std::size_t end = text.find('\n', start);
            const std::string line =
                text.substr(start, end == std::string::npos ? std::string::npos : end - start);
            if (!line.empty()) buffer_ += "# " + line + "\n";
            if (end == std::string::npos) break;
            start = end + 1;
        }
    }

    void columns(const std::vector<std::string>& names) {
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (i) buffer_ += ',';
            buffer_ += names[i];
        }
        buffer_ += '\n';
    }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) buffer_ += ',';
            buffer_ += format_value(values[i]);
        }
        buffer_ += '\n';
    }

    const std::string& str() const { return buffer_; }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("csv: cannot write " + path);
        out << buffer_;
    }

  private:
    std::string buffer_;
};

} // namespace blex
