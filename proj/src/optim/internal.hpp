#pragma once

#include "mupre/optim.hpp"

namespace mupre::detail {

// Unmeasured raw update of cfg.rule; advances s.t.
Matrix rule_update(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg);

Matrix sgd_update(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg);
Matrix adam_update(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg);
Matrix shampoo_update(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg);
Matrix soap_update(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg);
Matrix muon_update(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg);
Matrix adamuon_update(OptimizerState& s, const Matrix& g, const OptimizerConfig& cfg);

}  // namespace mupre::detail
