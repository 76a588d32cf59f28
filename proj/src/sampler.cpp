#include "twinbeam/sampler.hpp"

#include <cmath>
#include <condition_variable>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace twinbeam::sampler {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

int resolve_threads(int n_threads) {
    if (n_threads > 0) return n_threads;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}
}  // namespace

HomodyneRecord draw_two_mode(const nopa::TwinBeamParams& params, PhaseModel model,
                             rng::Xoshiro256pp& gen) {
    HomodyneRecord rec{};
    if (model == PhaseModel::IdealUniform) {
        rec.phi = kTwoPi * gen.uniform();
        rec.psi = kTwoPi * gen.uniform();
        rec.weight = 1.0;
        rec.sum_phase = 0.0;
    } else {
        // Uniform input phases; the quadrature phases follow the LO phases
        // of the amplified central components, and the record is weighted
        // by the inverse gain so that weighted averages reproduce uniform
        // (phi, psi) statistics.
        const double phi_v = kTwoPi * gen.uniform();
        const double phi_h = kTwoPi * gen.uniform();
        const double sigma = 0.5 * (phi_v + phi_h);
        const double delta = 0.5 * (phi_v - phi_h);
        const double common =
            std::arg(std::polar(1.0, sigma) + params.tau * std::polar(1.0, -sigma));
        rec.phi = delta + common;
        rec.psi = -delta + common;
        double sum = std::fmod(phi_v + phi_h, kTwoPi);
        if (sum < 0.0) sum += kTwoPi;
        rec.sum_phase = sum;
        rec.weight = 1.0 / nopa::gain(params, sum);
    }
    // Conditional decomposition of the joint density: x' from its marginal,
    // then x around c x'.
    const nopa::QuadPdfCoeffs co = nopa::quad_pdf_coeffs(params, rec.phi, rec.psi);
    double g0, g1;
    gen.normal_pair(g0, g1);
    rec.xp = g0 / std::sqrt(2.0 * co.b2);
    rec.x = co.c * rec.xp + g1 / std::sqrt(2.0 * co.a2);
    return rec;
}

HomodyneRecord draw_single_mode(const nopa::TwinBeamParams& params,
                                rng::Xoshiro256pp& gen) {
    HomodyneRecord rec{};
    rec.phi = kTwoPi * gen.uniform();
    double g0, g1;
    gen.normal_pair(g0, g1);
    rec.x = g0 * std::sqrt(nopa::single_quad_variance(params));
    rec.xp = 0.0;
    rec.psi = 0.0;
    rec.weight = 1.0;
    rec.sum_phase = 0.0;
    return rec;
}

SimChunkSource::SimChunkSource(const nopa::TwinBeamParams& params, int arity,
                               PhaseModel model, std::uint64_t n_records,
                               std::uint64_t seed) {
    if (n_records < 1) throw std::invalid_argument("SimChunkSource: need n_records >= 1");
    if (arity != 1 && arity != 2) throw std::invalid_argument("SimChunkSource: arity must be 1 or 2");
    meta_.params = params;
    meta_.arity = arity;
    meta_.phase_model = model;
    meta_.n_records = n_records;
    meta_.seed = seed;
    const std::uint64_t cs = meta_.chunk_size;
    n_chunks_ = (n_records + cs - 1) / cs;
}

void SimChunkSource::fill_chunk(std::uint64_t chunk_index,
                                std::vector<HomodyneRecord>& records) const {
    const std::uint64_t cs = meta_.chunk_size;
    const std::uint64_t begin = chunk_index * cs;
    const std::uint64_t count = std::min<std::uint64_t>(cs, meta_.n_records - begin);
    records.resize(count);
    rng::Xoshiro256pp gen(meta_.seed, chunk_index);
    if (meta_.arity == 2) {
        for (std::uint64_t i = 0; i < count; ++i)
            records[i] = draw_two_mode(meta_.params, meta_.phase_model, gen);
    } else {
        for (std::uint64_t i = 0; i < count; ++i)
            records[i] = draw_single_mode(meta_.params, gen);
    }
}

bool SimChunkSource::next_chunk(std::vector<HomodyneRecord>& records,
                                std::uint64_t& chunk_index) {
    const std::uint64_t idx = next_.fetch_add(1);
    if (idx >= n_chunks_) return false;
    chunk_index = idx;
    fill_chunk(idx, records);
    return true;
}

bool VectorChunkSource::next_chunk(std::vector<HomodyneRecord>& records,
                                   std::uint64_t& chunk_index) {
    const std::uint64_t cs = meta_.chunk_size;
    const std::uint64_t idx = next_.fetch_add(1);
    const std::uint64_t begin = idx * cs;
    if (begin >= records_.size()) return false;
    const std::uint64_t count = std::min<std::uint64_t>(cs, records_.size() - begin);
    records.assign(records_.begin() + begin, records_.begin() + begin + count);
    chunk_index = idx;
    return true;
}

namespace {

// Workers fill chunks out of order; the caller's sink sees them in order.
DatasetMeta run_generation(SimChunkSource& source, RecordSink& sink, int n_threads) {
    DatasetMeta meta = source.meta();
    const std::uint64_t n_chunks =
        (meta.n_records + meta.chunk_size - 1) / meta.chunk_size;
    const int workers =
        static_cast<int>(std::min<std::uint64_t>(resolve_threads(n_threads), n_chunks));
    meta.worker_count = workers;

    if (workers <= 1) {
        std::vector<HomodyneRecord> chunk;
        for (std::uint64_t c = 0; c < n_chunks; ++c) {
            source.fill_chunk(c, chunk);
            sink.append(chunk);
        }
        return meta;
    }

    std::mutex mu;
    std::condition_variable cv;
    std::map<std::uint64_t, std::vector<HomodyneRecord>> ready;
    std::uint64_t next_to_write = 0;
    const std::size_t window = static_cast<std::size_t>(workers) + 2;

    auto worker = [&] {
        std::vector<HomodyneRecord> chunk;
        std::uint64_t idx;
        while (source.next_chunk(chunk, idx)) {
            std::unique_lock lock(mu);
            cv.wait(lock, [&] { return idx < next_to_write + window; });
            ready.emplace(idx, std::move(chunk));
            chunk = {};
            while (!ready.empty() && ready.begin()->first == next_to_write) {
                auto node = ready.extract(ready.begin());
                lock.unlock();
                sink.append(node.mapped());
                lock.lock();
                ++next_to_write;
                cv.notify_all();
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return meta;
}

}  // namespace

DatasetMeta generate_dataset(const nopa::TwinBeamParams& params, PhaseModel model,
                             std::uint64_t n_records, std::uint64_t seed,
                             RecordSink& sink, int n_threads) {
    SimChunkSource source(params, 2, model, n_records, seed);
    return run_generation(source, sink, n_threads);
}

DatasetMeta generate_dataset_single(const nopa::TwinBeamParams& params,
                                    std::uint64_t n_records, std::uint64_t seed,
                                    RecordSink& sink, int n_threads) {
    SimChunkSource source(params, 1, PhaseModel::IdealUniform, n_records, seed);
    return run_generation(source, sink, n_threads);
}

}  // namespace twinbeam::sampler
