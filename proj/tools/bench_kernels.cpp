// Compares the serial reference kernels against the OpenMP versions and
// verifies they agree bit-for-bit on every measured input.

#include <chrono>
#include <cstdio>
#include <functional>
#include <cstring>
#include <string>
#include <vector>

#include <omp.h>

#include "devrec/kernels.hpp"
#include "devrec/rng.hpp"

using namespace devrec;

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto start = Clock::now();
    for (int i = 0; i < reps; ++i) fn();
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count() / reps;
}

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct Row {
    std::string name;
    double serial_ms;
    double omp_ms;
    bool identical;
};

}  // namespace

int main(int argc, char** argv) {
    std::size_t rows = 20000;
    std::size_t dim = 32;
    int reps = 20;
    for (int i = 1; i + 1 < argc; i += 2) {
        if (!std::strcmp(argv[i], "--rows")) rows = std::stoul(argv[i + 1]);
        if (!std::strcmp(argv[i], "--dim")) dim = std::stoul(argv[i + 1]);
        if (!std::strcmp(argv[i], "--reps")) reps = std::stoi(argv[i + 1]);
    }
    Rng rng(99);
    std::printf("rows=%zu dim=%zu reps=%d threads=%d\n", rows, dim, reps,
                omp_get_max_threads());

    std::vector<Row> table;
    auto bench = [&](const std::string& name, auto serial_fn, auto omp_fn,
                     std::vector<double>& out_serial, std::vector<double>& out_omp) {
        Row r;
        r.name = name;
        r.serial_ms = time_ms(serial_fn, reps);
        r.omp_ms = time_ms(omp_fn, reps);
        r.identical = bit_equal(out_serial, out_omp);
        table.push_back(r);
    };

    {
        auto a = random_vec(rows * dim, rng);
        auto b = random_vec(dim * dim, rng);
        std::vector<double> cs(rows * dim), co(rows * dim);
        bench(
            "matmul NxD*DxD",
            [&] { kernels::serial::matmul(a.data(), b.data(), cs.data(), rows, dim, dim); },
            [&] { kernels::omp::matmul(a.data(), b.data(), co.data(), rows, dim, dim); }, cs,
            co);
    }
    {
        auto a = random_vec(rows * dim, rng);
        std::vector<double> cs(rows * dim), co(rows * dim);
        bench(
            "relu", [&] { kernels::serial::relu(a.data(), cs.data(), a.size()); },
            [&] { kernels::omp::relu(a.data(), co.data(), a.size()); }, cs, co);
    }
    {
        auto a = random_vec(rows * dim, rng);
        std::vector<double> cs(rows * dim), co(rows * dim);
        bench(
            "softmax_rows",
            [&] { kernels::serial::softmax_rows(a.data(), cs.data(), rows, dim); },
            [&] { kernels::omp::softmax_rows(a.data(), co.data(), rows, dim); }, cs, co);
    }
    {
        // segments of ~8 rows
        auto a = random_vec(rows * dim, rng);
        std::vector<std::uint32_t> offsets{0};
        while (offsets.back() < rows) {
            offsets.push_back(std::min<std::uint32_t>(
                offsets.back() + 1 + static_cast<std::uint32_t>(rng.next_below(15)),
                static_cast<std::uint32_t>(rows)));
        }
        const std::size_t segs = offsets.size() - 1;
        std::vector<double> cs(segs * dim), co(segs * dim);
        bench(
            "segment_mean",
            [&] {
                kernels::serial::segment_mean(a.data(), offsets.data(), segs, cs.data(), dim);
            },
            [&] { kernels::omp::segment_mean(a.data(), offsets.data(), segs, co.data(), dim); },
            cs, co);
    }
    {
        auto a = random_vec(rows * dim, rng);
        std::vector<std::uint32_t> idx(rows * 2);
        for (auto& i : idx) i = static_cast<std::uint32_t>(rng.next_below(rows));
        std::vector<double> cs(idx.size() * dim), co(idx.size() * dim);
        bench(
            "gather_rows",
            [&] {
                kernels::serial::gather_rows(a.data(), idx.data(), idx.size(), cs.data(), dim);
            },
            [&] { kernels::omp::gather_rows(a.data(), idx.data(), idx.size(), co.data(), dim); },
            cs, co);
    }
    {
        auto a = random_vec(rows * dim, rng);
        auto b = random_vec(rows * dim, rng);
        std::vector<double> cs(rows), co(rows);
        bench(
            "row_inner_product",
            [&] {
                kernels::serial::row_inner_product(a.data(), b.data(), cs.data(), rows, dim);
            },
            [&] { kernels::omp::row_inner_product(a.data(), b.data(), co.data(), rows, dim); },
            cs, co);
    }

    std::printf("%-20s %12s %12s %9s %s\n", "kernel", "serial ms", "omp ms", "speedup",
                "bit-identical");
    bool all_ok = true;
    for (const Row& r : table) {
        std::printf("%-20s %12.3f %12.3f %8.2fx %s\n", r.name.c_str(), r.serial_ms, r.omp_ms,
                    r.serial_ms / r.omp_ms, r.identical ? "yes" : "NO");
        all_ok = all_ok && r.identical;
    }
    return all_ok ? 0 : 1;
}
