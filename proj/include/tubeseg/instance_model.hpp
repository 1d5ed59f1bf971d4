// Gaussian instance distributions over embedding space.
#pragma once

#include <span>
#include <vector>

#include "tubeseg/fields.hpp"
#include "tubeseg/volume.hpp"

namespace tubeseg {

// Diagonal Gaussian summarizing one instance's embedding cluster.
struct GaussianInstance {
  std::vector<double> mean;       // length E
  std::vector<double> variances;  // length E, strictly positive
};

// unnormalized: exp(-0.5 * sum_d (e_d-mu_d)^2 / var_d), in (0, 1].
// normalized:  multiplies by (2*pi)^(-E/2) * |Sigma|^(-1/2); the full
// density, not bounded by 1.
enum class ProbMode { unnormalized, normalized };

// Element-wise means of the given embedding and variance rows.
// Throws ConfigError on zero rows, shape mismatch or non-positive variance.
GaussianInstance instance_stats(const FieldMatrix& embedding_rows,
                                const FieldMatrix& variance_rows);

// Same, restricted to the given pixel indices of full fields.
GaussianInstance instance_stats(const FieldMatrix& embeddings,
                                const FieldMatrix& variances,
                                std::span<const Index> pixels);

double gaussian_prob(std::span<const double> e, const GaussianInstance& g,
                     ProbMode mode);

// gaussian_prob applied per pixel row.
std::vector<double> prob_field(const FieldMatrix& embeddings,
                               const GaussianInstance& g, ProbMode mode);

// Membership iff prob > threshold (strict).
MaskTube threshold_mask(const VolumeDims& dims, std::span<const double> probs,
                        double threshold = 0.5);

}  // namespace tubeseg
