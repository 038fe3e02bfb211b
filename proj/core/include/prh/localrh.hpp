#pragma once

#include <map>
#include <nlohmann/json_fwd.hpp>
#include <random>
#include <string>
#include <vector>

#include "prh/complexes.hpp"

namespace prh {

// theta_i carries the (zeta_p - 1) factor: theta_i = (zeta_p - 1) * theta_hat_i.
struct HiggsDatum {
  const ModelRing* ring = nullptr;  // t_order 1
  int rank = 0, dim = 0;
  std::vector<SeriesMatrix> theta;
};

// Components of nabla along dlog T_i / xi_K.
struct ConnectionDatum {
  const ModelRing* ring = nullptr;
  int rank = 0, dim = 0;
  std::vector<SeriesMatrix> nabla;
};

struct GammaRepDatum {
  const ModelRing* ring = nullptr;
  int rank = 0, dim = 0;
  std::vector<SeriesMatrix> gamma;
};

// Polynomial in the formal symbols x_1..x_d.
using Polynomial = std::map<MultiIndex, PAdicScalar>;

// components[i-1] is the homogeneous degree-i invariant: the i-th elementary
// symmetric function of the eigenvalues of sum x_j theta_j.
struct HitchinPoint {
  int dim = 0, rank = 0;
  std::vector<Polynomial> components;
};

struct SmallnessVerdict {
  bool small = false;
  std::string witness;
  std::vector<SeriesMatrix> theta_hat;  // filled by check_small_rep
};

void check_commuting(const std::vector<SeriesMatrix>& ops);

HitchinPoint hitchin_invariants(const HiggsDatum& h);
bool hitchin_equal(const HitchinPoint& a, const HitchinPoint& b);
nlohmann::json hitchin_to_json(const HitchinPoint& h);

HiggsDatum higgs_reduction(const ConnectionDatum& m);
SmallnessVerdict check_small_higgs(const HiggsDatum& h);
SmallnessVerdict check_small_rep(const GammaRepDatum& g);
GammaRepDatum higgs_to_rep_closed(const HiggsDatum& h);

// Matrix exponential and logarithm over B_n; convergence is decided from the
// Gauss valuations of the constant and t-parts.
SeriesMatrix matrix_exp(const SeriesMatrix& x);
SeriesMatrix matrix_log(const SeriesMatrix& g);
SeriesMatrix kron(const SeriesMatrix& a, const SeriesMatrix& b);

// Window complexes on Lambda^q (B_n^r) (x) P, P = B_n<W_1..W_d>_pd, with
// D_i = M_i (x) 1 + s * d/dW_i; terms above the target degree are dropped.
SparseMatrix window_differential(const ModelRing* ring, int d, int r, const std::vector<SeriesMatrix>& M,
                                 const Series& s, int q, int src_deg, int tgt_deg);
int window_index(int d, int r, int deg, int subset, const MultiIndex& J, int k);
// C^q = Lambda^q (x) B_n^r (x) P_{<= D - q}
ComplexData window_complex(const ModelRing* ring, int d, int r, const std::vector<SeriesMatrix>& M, const Series& s,
                           int D);

struct MicToRep {
  GammaRepDatum rep;                 // expressed in the basis of horizontal sections
  SeriesMatrix basis;                // W = 0 values of that basis in D-coordinates
  std::vector<SeriesMatrix> deriv;   // d/dW_i on the kernel, in the same basis
  long long decided = kInfVal;
};

struct RepToMic {
  ConnectionDatum mic;
  SeriesMatrix basis;  // W = 0 values of the invariant basis in L-coordinates
  long long residual_margin = kInfVal;  // pi-units the Gamma residual clears its tail bound by
  long long decided = kInfVal;
};

MicToRep mic_to_rep(const ConnectionDatum& m, int pd_cap);
RepToMic rep_to_mic(const GammaRepDatum& g, int pd_cap);

struct RoundtripReport {
  bool pass = false;
  Rational defect_mic{0}, defect_rep{0};  // p-adic valuation of the defect matrices
  bool hitchin_preserved = false;
  bool tensor_dual_ok = true;
  SeriesMatrix base_change_mic, base_change_rep;
  std::string failure;
};

// closed-form representation exp(c * nabla_i / u) of a constant-coefficient connection
GammaRepDatum exponential_rep(const ConnectionDatum& m);
RoundtripReport roundtrip_check(const ConnectionDatum& m, int pd_cap, Rational required);
nlohmann::json roundtrip_to_json(const RoundtripReport& r);

CohomologyReport gamma_cohomology(const GammaRepDatum& g);
CohomologyReport de_rham_cohomology(const ConnectionDatum& m);

struct PoincareReport {
  bool h0_is_constants = false;
  int cocycles = 0;
  int coboundaries = 0;
  std::vector<int> per_degree;  // certified coboundaries per degree 1..d
};
// Truncated de Rham complex of P_{<= D}: H^0 on degree <= D-1 and random
// cocycles of degree <= D-1 solved from degree <= D.
PoincareReport poincare_check(const ModelRing* ring, int d, int D, int samples, std::mt19937_64& rng);

struct DevissageVerdict {
  bool projective = false;
  int rank = 0;
  int failing_n = -1;
  std::vector<int> graded_lengths;  // len(t^n M / t^{n+1} M)
  std::vector<SparseVec> basis;
};
// M = B_m^gens / span(relations)
DevissageVerdict devissage_lift(const ModelRing* ring, int gens, const std::vector<SparseVec>& relations);

struct AnnihilationVerdict {
  bool holds = false;
  int window = 0;   // basis vectors of degree <= D - N - (r - 1)
  int solved = 0;   // c * e integrally in the image of gamma - 1
};
// d = 1, t_order 1: integral lattice L+ (x) O_F<W>_pd truncated at degree D, modulo p^N.
AnnihilationVerdict annihilation_check(const GammaRepDatum& g, int pd_cap);

// theta_hat_i = P (lambda_i + f_i(A)) P^{-1} with A strictly upper triangular,
// lambda_i in p O_F[t] (small case) or a unit (non-small case); nabla_i = u theta_hat_i.
ConnectionDatum generate_connection(const ModelRing* ring, int rank, int dim, std::mt19937_64& rng,
                                    bool small = true);

nlohmann::json matrices_to_json(const std::vector<SeriesMatrix>& ms);
std::vector<SeriesMatrix> matrices_from_json(const ModelRing* ring, int rank, const nlohmann::json& j);

}  // namespace prh
