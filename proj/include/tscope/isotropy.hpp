/*
 * Copyright 2026 The tangentscope Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include "tscope/subspace.hpp"
#include "tscope/types.hpp"

#include <vector>

namespace tscope {

// Eigenvalues sorted descending. Values in [-1e-12, 0) and values below 1e-12 * max are set to 0;
// anything more negative is rejected.
class Spectrum {
public:
    Spectrum(std::vector<double> eigenvalues, Index ambient_dim);

    const std::vector<double>& eigenvalues() const { return values_; }
    Index ambient_dim() const { return ambient_dim_; }
    Index positive_count() const;
    double sum() const;

private:
    std::vector<double> values_;
    Index ambient_dim_;
};

struct Covariance {
    Eigen::MatrixXd matrix;
    double shrinkage_alpha = 0.0;

    // Σ_B = BᵀB / D_out
    static Covariance of_gradient(const Matrix& b);
};

// (||λ||_1^2 / ||λ||_2^2 - 1) / (d - 1) with d the spectrum's ambient dimension.
double isoscore_star(const Spectrum& s);

// The same closed form under the two normalisations in circulation: d = ambient dimension and
// d = number of positive eigenvalues. The latter is NaN when fewer than two are positive.
struct IsoScoreConventions {
    double ambient_d = 0.0;
    double support_d = 0.0;
};
IsoScoreConventions isoscore_star_conventions(const Spectrum& s);

Covariance shrink_covariance(const Covariance& c, double alpha);
Spectrum spectrum_of(const Covariance& c);
// Shrinkage applied directly to eigenvalues: (1-α)λ + α·tr/d, zero-padded to the ambient dimension.
Spectrum shrink_spectrum(const Spectrum& s, double alpha);
// Eigenvalues of shrink(BᵀB / D_out, α) through whichever Gram side is smaller.
Spectrum gradient_spectrum(const Matrix& b, double alpha);

double effective_rank(const Spectrum& s);
// Smallest k whose cumulative explained variance reaches `fraction`; cap + 1 when k > cap.
Index pca70(const Spectrum& s, double fraction = 0.7, Index cap = 100);
// Mean |cos| between index-matched leading columns.
double eigvec_similarity(const OrthonormalBasis& prev, const OrthonormalBasis& next, Index topk);

} // namespace tscope
