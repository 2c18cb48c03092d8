#pragma once

#include "klift/bases.hpp"
#include "klift/model.hpp"
#include "klift/numlin.hpp"
#include "klift/snapshots.hpp"

#include <string>
#include <vector>

namespace klift {

enum class RankPolicy {
    Error,     // rank-deficient P_x raises ConditioningError
    Restrict,  // work on the retained singular subspace and warn
};

struct PinvSummary {
    Index rank = 0;
    Index full = 0;
    double cutoff = 0.0;
    double condition = 0.0;
};

struct GeneratorEstimate {
    Matrix L;  // N x N
    Dictionary dictionary;
    double Ts = 0.0;
    LogmResult logm;  // logm.logm left empty, L holds the result
    PinvSummary pinv;
    std::vector<std::string> warnings;
};

struct MainOptions {
    double rcond = kDefaultRcond;
    RankPolicy rank_policy = RankPolicy::Error;
    BranchPolicy branch_policy = BranchPolicy::Strict;
};

struct MainResult {
    VectorFieldModel model;
    GeneratorEstimate generator;
    // largest |coefficient| dropped by the degree-m_F truncation
    double truncated_max = 0.0;
    std::vector<std::string> warnings;
};

// L = logm(pinv(P_x) P_y) / Ts for lifted augmented states.
GeneratorEstimate main_generator(const Matrix& Xa, const Matrix& Ya, const Dictionary& d, double Ts,
                                 const MainOptions& opt = {});

MainResult identify_main(const SnapshotSet& data, int m, int m_F, const MainOptions& opt = {});
// state augmented with the held inputs; coefficients are read for the state rows only
MainResult identify_main_with_inputs(const SnapshotSet& data, int m, int m_F, const MainOptions& opt = {});
// lift = Monomial(m) followed by `extra`
MainResult identify_main_augmented(const SnapshotSet& data, int m, const Dictionary& extra,
                                   const MainOptions& opt = {});

// column j = P_x L e_l with l the index of x_j
Matrix vector_field_at_samples_main(const GeneratorEstimate& gen, const SnapshotSet& data);

}  // namespace klift
