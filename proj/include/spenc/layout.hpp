#pragma once

#include <string>
#include <vector>

#include "spenc/errors.hpp"

namespace spenc {

enum class TransformKind { softplus, exp };

struct ParamBlock {
  std::string name;
  long offset;
  long size;
  TransformKind transform;
};

// Flat layout of every scalar latent parameter, shared by the unconstrained
// and constrained spaces. Magnitude blocks come first (softplus-mapped),
// then the squared-scale blocks of the two horseshoe families (exp-mapped).
//
//   u              I*K   encoder magnitudes, column-major (i, k)
//   s_plus/s_minus I     gate pair
//   w              I     background gains
//   beta           K*I   decoder, column-major (k, i)
//   u_hs_lambda2   I*K   local squared scales for u, same indexing as u
//   u_hs_lambda_aux I*K
//   u_hs_tau2      K     one global per encoder column
//   u_hs_tau_aux   K
//   s_hs_lambda2   2I    locals for the gate pairs: [0,I) plus, [I,2I) minus
//   s_hs_lambda_aux 2I
//   s_hs_tau2      I     one global per item pair
//   s_hs_tau_aux   I
class ParamLayout {
 public:
  ParamLayout() = default;

  ParamLayout(long n_items, long n_factors)
      : n_items_(n_items), n_factors_(n_factors) {
    if (n_factors < 1) throw ConfigError("factor count must be >= 1");
    if (n_factors > n_items) {
      throw ConfigError("factor count " + std::to_string(n_factors) +
                        " exceeds item count " + std::to_string(n_items));
    }
    long off = 0;
    auto block = [&](const std::string& name, long size, TransformKind t) {
      blocks_.push_back({name, off, size, t});
      const long at = off;
      off += size;
      return at;
    };
    const long ik = n_items * n_factors;
    u = block("u", ik, TransformKind::softplus);
    s_plus = block("s_plus", n_items, TransformKind::softplus);
    s_minus = block("s_minus", n_items, TransformKind::softplus);
    w = block("w", n_items, TransformKind::softplus);
    beta = block("beta", ik, TransformKind::softplus);
    u_hs_lambda2 = block("u_hs_lambda2", ik, TransformKind::exp);
    u_hs_lambda_aux = block("u_hs_lambda_aux", ik, TransformKind::exp);
    u_hs_tau2 = block("u_hs_tau2", n_factors, TransformKind::exp);
    u_hs_tau_aux = block("u_hs_tau_aux", n_factors, TransformKind::exp);
    s_hs_lambda2 = block("s_hs_lambda2", 2 * n_items, TransformKind::exp);
    s_hs_lambda_aux = block("s_hs_lambda_aux", 2 * n_items, TransformKind::exp);
    s_hs_tau2 = block("s_hs_tau2", n_items, TransformKind::exp);
    s_hs_tau_aux = block("s_hs_tau_aux", n_items, TransformKind::exp);
    dim_ = off;
  }

  long items() const { return n_items_; }
  long factors() const { return n_factors_; }
  long dim() const { return dim_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }

  const ParamBlock& block_at(long index) const {
    for (const auto& b : blocks_) {
      if (index >= b.offset && index < b.offset + b.size) return b;
    }
    throw ConfigError("parameter index out of range");
  }

  bool softplus_mapped(long index) const {
    return index < u_hs_lambda2;  // magnitude blocks precede scale blocks
  }

  long u = 0, s_plus = 0, s_minus = 0, w = 0, beta = 0;
  long u_hs_lambda2 = 0, u_hs_lambda_aux = 0, u_hs_tau2 = 0, u_hs_tau_aux = 0;
  long s_hs_lambda2 = 0, s_hs_lambda_aux = 0, s_hs_tau2 = 0, s_hs_tau_aux = 0;

 private:
  long n_items_ = 0;
  long n_factors_ = 0;
  long dim_ = 0;
  std::vector<ParamBlock> blocks_;
};

}  // namespace spenc
