#pragma once

#include "klift/bases.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace klift {

struct Provenance {
    std::string system;
    double sigma_meas = 0.0;
    double sigma_proc = 0.0;
    std::uint64_t seed = 0;
    // exact (noise-free) states, when simulated
    std::optional<Matrix> X_exact;
    std::optional<Matrix> Y_exact;
};

struct SnapshotSet {
    Matrix X;  // K x n pre-states
    Matrix Y;  // K x n post-states
    double Ts = 0.0;
    std::optional<Matrix> inputs;  // K x p, held over each pair
    std::vector<int> trajectory_id;
    std::vector<int> pair_index;
    Provenance meta;

    Index K() const { return X.rows(); }
    int n() const { return static_cast<int>(X.cols()); }
    int p() const { return inputs ? static_cast<int>(inputs->cols()) : 0; }
    // [X U] and [Y U]
    Matrix augmented_X() const;
    Matrix augmented_Y() const;
};

// Throws on shape mismatch, non-finite entries, Ts <= 0 or an empty set.
void validate(const SnapshotSet& data);

}  // namespace klift
