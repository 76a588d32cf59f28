#ifndef TWINBEAM_SAMPLER_HPP
#define TWINBEAM_SAMPLER_HPP

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "twinbeam/nopa_model.hpp"
#include "twinbeam/rng.hpp"

// Deterministic Monte-Carlo generation of self-homodyne measurement records
// from the exact joint quadrature density, under either the ideal phase
// model (independent uniform LO phases, weight 1) or the self-homodyne model
// (phases driven by uniform input phases, importance weight 1/gain).

namespace twinbeam::sampler {

enum class PhaseModel { IdealUniform, SelfHomodyne };

struct HomodyneRecord {
    double x;          // rescaled photocurrent, vertical channel
    double xp;         // horizontal channel (unused for single-mode data)
    double phi;        // quadrature phase of the vertical mode
    double psi;        // quadrature phase of the horizontal mode (unused 1-mode)
    double weight;     // importance weight; 1 under IdealUniform
    double sum_phase;  // input-phase sum (SelfHomodyne only)
};

struct DatasetMeta {
    nopa::TwinBeamParams params;
    int arity = 2;  // 1 or 2 modes
    PhaseModel phase_model = PhaseModel::IdealUniform;
    std::uint64_t n_records = 0;
    std::uint64_t seed = 0;
    int format_version = 1;
    std::uint32_t chunk_size = kChunkSize;
    int worker_count = 1;  // declared for provenance; the stream is
                           // independent of it by construction

    static constexpr std::uint32_t kChunkSize = 1u << 16;
};

HomodyneRecord draw_two_mode(const nopa::TwinBeamParams& params, PhaseModel model,
                             rng::Xoshiro256pp& gen);

// Single-mode self-homodyning of the vertical channel alone: uniform phase,
// Gaussian quadrature outcome, weight 1.
HomodyneRecord draw_single_mode(const nopa::TwinBeamParams& params,
                                rng::Xoshiro256pp& gen);

// Receives the record stream in order. append() is called with consecutive
// slices; no slice is ever delivered twice.
class RecordSink {
public:
    virtual ~RecordSink() = default;
    virtual void append(std::span<const HomodyneRecord> records) = 0;
};

class VectorSink final : public RecordSink {
public:
    void append(std::span<const HomodyneRecord> records) override {
        records_.insert(records_.end(), records.begin(), records.end());
    }
    const std::vector<HomodyneRecord>& records() const { return records_; }
    std::vector<HomodyneRecord> take() { return std::move(records_); }

private:
    std::vector<HomodyneRecord> records_;
};

// Generates exactly n_records into the sink, chunked in kChunkSize blocks
// with per-chunk substreams; byte-identical for identical
// (params, model, n_records, seed) at any worker count.
DatasetMeta generate_dataset(const nopa::TwinBeamParams& params, PhaseModel model,
                             std::uint64_t n_records, std::uint64_t seed,
                             RecordSink& sink, int n_threads = 0);

DatasetMeta generate_dataset_single(const nopa::TwinBeamParams& params,
                                    std::uint64_t n_records, std::uint64_t seed,
                                    RecordSink& sink, int n_threads = 0);

// Pull-style chunk source consumed by the estimator; chunk indices are the
// merge-tree leaves, so implementations must use the fixed kChunkSize layout.
class ChunkSource {
public:
    virtual ~ChunkSource() = default;
    // Returns false when exhausted; otherwise fills records/chunk index.
    // Thread safe.
    virtual bool next_chunk(std::vector<HomodyneRecord>& records,
                            std::uint64_t& chunk_index) = 0;
    virtual DatasetMeta meta() const = 0;
};

// Generates records on demand, chunk by chunk; trivially parallel.
class SimChunkSource final : public ChunkSource {
public:
    SimChunkSource(const nopa::TwinBeamParams& params, int arity, PhaseModel model,
                   std::uint64_t n_records, std::uint64_t seed);
    bool next_chunk(std::vector<HomodyneRecord>& records,
                    std::uint64_t& chunk_index) override;
    DatasetMeta meta() const override { return meta_; }

    // Fills one chunk deterministically from its index.
    void fill_chunk(std::uint64_t chunk_index, std::vector<HomodyneRecord>& records) const;

private:
    DatasetMeta meta_;
    std::uint64_t n_chunks_;
    std::atomic<std::uint64_t> next_{0};
};

class VectorChunkSource final : public ChunkSource {
public:
    VectorChunkSource(std::vector<HomodyneRecord> records, DatasetMeta meta)
        : records_(std::move(records)), meta_(meta) {
        meta_.n_records = records_.size();
    }
    bool next_chunk(std::vector<HomodyneRecord>& records,
                    std::uint64_t& chunk_index) override;
    DatasetMeta meta() const override { return meta_; }

private:
    std::vector<HomodyneRecord> records_;
    DatasetMeta meta_;
    std::atomic<std::uint64_t> next_{0};
};

}  // namespace twinbeam::sampler

#endif
