#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "turbulux/error.hpp"
#include "turbulux/simulator.hpp"

namespace turbulux {

SampleSet SampleSet::head(std::size_t m) const {
    if (m > size()) throw InvalidArgument("simulator", "head() asked for more samples than stored");
    SampleSet out = *this;
    auto cut = [m](std::vector<double>& v) { v.resize(m); };
    for (auto& e : out.eta) cut(e);
    cut(out.x0);
    cut(out.y0);
    cut(out.S);
    cut(out.Sy);
    return out;
}

std::size_t SampleSet::aperture_index(double a) const {
    for (std::size_t k = 0; k < apertures.size(); ++k) {
        if (std::abs(apertures[k] - a) <= 1e-12) return k;
    }
    throw InvalidArgument("simulator", "aperture " + std::to_string(a) + " m not in the sample set");
}

void SampleSet::validate() const {
    const std::size_t n = x0.size();
    if (y0.size() != n || S.size() != n || Sy.size() != n || eta.size() != apertures.size()) {
        throw InvalidArgument("simulator", "sample set columns have unequal length");
    }
    for (const auto& e : eta) {
        if (e.size() != n) throw InvalidArgument("simulator", "sample set columns have unequal length");
        for (double v : e) {
            if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("simulator", "eta sample outside [0, 1]");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(S[i] > 0.0) || !(Sy[i] > 0.0)) throw InvalidArgument("simulator", "S sample must be positive");
    }
}

SampleSet run_ensemble(const ChannelConfig& config, const GridSpec& grid_in, std::size_t n,
                       std::uint64_t seed, const std::vector<double>& apertures,
                       const EnsembleOptions& options) {
    config.validate(false);
    if (n == 0) throw InvalidArgument("simulator", "realization count must be >= 1");
    if (apertures.empty()) throw InvalidArgument("simulator", "need at least one aperture");
    const GridSpec grid = resolve_grid(grid_in, config);
    for (double a : apertures) {
        if (!(a > 0.0) || a > 0.5 * grid.window * (1.0 - 2.0 / grid.n)) {
            throw InvalidArgument("simulator", "aperture must be positive and inside the window");
        }
    }

    SampleSet set;
    set.channel = config.resolved();
    set.grid = grid;
    set.seed = seed;
    set.apertures = apertures;
    set.eta.assign(apertures.size(), std::vector<double>(n));
    set.x0.resize(n);
    set.y0.resize(n);
    set.S.resize(n);
    set.Sy.resize(n);

    unsigned workers = options.workers == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                            : options.workers;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));

    const FieldGrid start = initial_field(config, grid);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::mutex progress_mutex;

    auto work = [&]() {
        try {
            Propagator prop(config, grid);
            while (!failed.load()) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                try {
                    numerics::RngStream rng(seed, i);
                    const FieldGrid out = prop.propagate(start, rng);
                    const Observables o = measure_observables(out, apertures);
                    for (std::size_t k = 0; k < apertures.size(); ++k) set.eta[k][i] = o.eta[k];
                    set.x0[i] = o.x0;
                    set.y0[i] = o.y0;
                    set.S[i] = o.S;
                    set.Sy[i] = o.Sy;
                } catch (const std::exception& e) {
                    throw Error("simulator", "realization " + std::to_string(i) + ": " + e.what());
                }
                const std::size_t d = done.fetch_add(1) + 1;
                if (options.progress) {
                    std::lock_guard<std::mutex> lock(progress_mutex);
                    options.progress(d, n);
                }
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
            failed.store(true);
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    return set;
}

}  // namespace turbulux
