#pragma once

#include "klift/bases.hpp"
#include "klift/koopman_main.hpp"
#include "klift/model.hpp"
#include "klift/numlin.hpp"
#include "klift/snapshots.hpp"
#include "klift/sparse_reg.hpp"

#include <string>
#include <vector>

namespace klift {

struct DualGeneratorEstimate {
    Matrix Ltilde;  // K x K
    Dictionary dictionary;
    double Ts = 0.0;
    LogmResult logm;  // logm.logm left empty
    PinvSummary pinv;
    std::vector<std::string> warnings;
};

struct FieldSamples {
    Matrix F_hat;              // rows x n
    std::vector<Index> rows;   // rows of the originating SnapshotSet
};

struct DualOptions {
    double rcond = kDefaultRcond;
    BranchPolicy branch_policy = BranchPolicy::Strict;
    // Restrict works on the retained left singular subspace when P_x loses row rank
    RankPolicy rank_policy = RankPolicy::Error;
    int workers = 1;
};

struct DualResult {
    VectorFieldModel model;
    DualGeneratorEstimate generator;
    FieldSamples samples;
    std::vector<RegressionReport> reports;  // one per state
    std::vector<std::string> warnings;
};

DualGeneratorEstimate dual_generator(const SnapshotSet& data, const Dictionary& d, const DualOptions& opt = {});
FieldSamples field_samples(const DualGeneratorEstimate& gen, const SnapshotSet& data);
// `libraries` holds one shared library or one per state.
DualResult identify_dual(const SnapshotSet& data, const Dictionary& test, const std::vector<Dictionary>& libraries,
                         const RegressionSpec& reg, const DualOptions& opt = {});

}  // namespace klift
