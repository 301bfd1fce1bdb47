#pragma once

#include "dfsbqc/analytics.hpp"
#include "dfsbqc/blindness.hpp"
#include "dfsbqc/protocol.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dfsbqc::harness {

/// Channel parameters for a sweep: either a fixed delta or a per-trial
/// sampling scheme.
struct DeltaSpec {
    bool fixed = true;
    double a_abs2 = 1.0;
    double d_abs2 = 1.0;
    double phase_a = 0.0;
    double phase_b = 0.0;
    double phase_c = 0.0;
    double phase_d = 0.0;
    DeltaScheme scheme = DeltaScheme::uniform_moduli;

    NoiseParams make() const;
};

struct SweepSpec {
    Protocol protocol = Protocol::entanglement;
    std::vector<double> T_grid;
    std::vector<int> N_grid;       ///< single-photon protocol
    std::vector<double> mu_grid;   ///< coherent protocol
    DeltaSpec delta;
    long long trials = 100000;
    std::uint64_t seed = 42;
    std::string out;               ///< output path; empty writes nothing
};

struct SweepRow {
    Protocol protocol = Protocol::entanglement;
    double T = 1.0;
    std::optional<int> N;
    std::optional<double> mu;
    std::optional<double> a_abs2;
    std::optional<double> d_abs2;
    long long trials = 0;
    double p_hat = 0.0;
    double stderr_ = 0.0;
    std::optional<double> p_analytic;
    std::optional<double> abs_diff;
    std::optional<double> sigma_ratio;
    std::string flag;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::string csv;
};

/// Runs the grid, attaches the analytic counterpart per row and renders CSV.
/// Asymmetric-moduli coherent points are emitted twice: once against the
/// i.i.d.-walk formula (flag "paper-formula") and once against the exact
/// cascade (flag "exact-cascade"); only the latter is expected to track the
/// Monte Carlo estimate.
SweepResult cmd_sweep(const SweepSpec& spec);

/// (|a|, |d|, limit coefficient) grid rendered as CSV. resolution >= 11.
std::string cmd_coeff_surface(int resolution);

/// Blindness identity verdicts as CSV rows (protocol, identity,
/// trace_distance, pass).
std::string cmd_blindness();

struct VerifyItem {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct VerifyReport {
    std::vector<VerifyItem> items;
    bool all_pass = true;
};

/// Runs the exact identities and property suites against the given channel
/// point. Every item carries the invariant's name so a failure is
/// attributable.
VerifyReport cmd_verify(const NoiseParams& delta, double transmission,
                        std::uint64_t seed, long long trials);

// Individual invariant checks, callable from tests.
VerifyItem check_channel_unitarity(const NoiseParams& delta);
VerifyItem check_identity_channel();
VerifyItem check_collectivity(const NoiseParams& delta);
VerifyItem check_measurement_completeness(const NoiseParams& delta);
VerifyItem check_involutions();
VerifyItem check_serialization_determinism(std::uint64_t seed);
VerifyItem check_per_pair_half(std::uint64_t seed);
VerifyItem check_entanglement_delivered_success(std::uint64_t seed, long long trials);
VerifyItem check_one_one_resolves(const NoiseParams& delta, std::uint64_t seed);
VerifyItem check_exponent_bookkeeping(const NoiseParams& delta, std::uint64_t seed);
VerifyItem check_phase_invariance(double transmission, std::uint64_t seed,
                                  long long trials);
VerifyItem check_walk_layer();
VerifyItem check_blindness_identities();
VerifyItem check_reproducibility(std::uint64_t seed);

/// Applies the DFSBQC_THREADS cap to the OpenMP worker pool, when set.
void apply_thread_cap_from_env();

void write_file(const std::string& path, const std::string& content);

std::string format_double(double v);

}  // namespace dfsbqc::harness
