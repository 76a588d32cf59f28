#ifndef TWINBEAM_ESTIMATE_IO_HPP
#define TWINBEAM_ESTIMATE_IO_HPP

#include <string>

#include "twinbeam/estimator.hpp"

// JSON serialization of density-matrix estimates: complex elements as
// re/im pairs with per-element stderr, plus an opaque provenance block the
// caller fills in (config, dataset hash, code version). Output is key-order
// stable so identical inputs give byte-identical files.

namespace twinbeam::estimate_io {

std::string to_json(const estimator::DensityMatrixEstimate& est,
                    const std::string& provenance_json = "{}");

estimator::DensityMatrixEstimate from_json(const std::string& text);

void write_file(const std::string& path, const estimator::DensityMatrixEstimate& est,
                const std::string& provenance_json = "{}");
estimator::DensityMatrixEstimate read_file(const std::string& path);

}  // namespace twinbeam::estimate_io

#endif
