#pragma once

#include <optional>

#include "ucb/aads.hpp"
#include "ucb/io.hpp"

namespace ucb {

struct RunConfig {
    std::string scenario = "planar";  // planar | planar-localized | pure-ads |
                                      // fg-generic | custom-metric
    DomainSpec domain;
    HierarchyConfig exponents;
    int n0 = 12;
    int n_max = 20;
    GridResolution resolution;
    int K_corr = 2;
    double epsilon_zeta = 0.25;
    double tol_eik = 1e-9;
    int eik_grid = 33;
    double certify_tol = 1e-5;
    double certify_tol_near = 1e-4;
    int interior_probes_per_band = 72;
    int near_probes_per_band = 16;
    bool deep_decay_schedule = true;
    double mu = -0.25;        // KG mass; xi = mu - (d^2 - 1)/4 when use_kg_xi
    bool use_kg_xi = false;   // default planar xi is the constant -1
    double ads_epsilon = 0.3;
    double ads_delta = 0.01;
    double ads_rho0 = 0.01;
    std::optional<BumpProfile> bump;
    Vec kbar = {1.0};
    std::string out_dir = "out";
    std::string metric_file;  // custom-metric scenario
    std::uint64_t seed = 12345;
    int threads = 0;

    void validate() const;
    std::string to_json() const;  // canonical ordered form
    static RunConfig from_json(const std::string& text);
    static RunConfig from_json_file(const std::string& path);
};

struct Verdict {
    std::string name;
    bool pass = false;
    double value = 0;
    double threshold = 0;
    std::string relation;  // "<=", ">=", "in" (plain annotation)
};

struct BandRecord {
    int n = 0, J = 0;
    double lambda = 0;
    double sup_c0 = 0, sup_cstar = 0, measured_K0 = 1;
    LadderReport ladder;
    double conjugation_dev = 0;
    std::vector<double> chi_K_table;
    std::vector<double> amp_K_table;
    // surface S_n (when located)
    bool has_surface = false;
    double surface_mid = 0, surface_residual_Bn = 0, surface_C1 = 0, surface_fit_residual = 0;
    double min_monotone_slope = 0;
    // correction
    double psi_slope_lower = 0, psi_slope_upper = 0;
    double sup_omega = 0;
    bool support_ok = true;
    double probe_cross_dev = 0, min_a_ee = 0, jacobian_K0 = 0;
    double amp_bracket = 0;  // log sup |v~_n| / n^2
};

struct RunResult {
    RunConfig config;
    EikonalCertification eikonal;
    std::vector<BandRecord> bands;
    DecayReport decay;
    CertifyReport certify;
    std::vector<OverlapDiagnostics> overlaps;
    KgCertifyReport kg;
    // aads extras
    double embedding_dev = -1;
    double roundtrip_dev = -1;
    SupportVerdict support;
    SupportVerdict support_large_delta;
    GnccResult gncc_flat, gncc_convex;
    ConformalOperator conformal;
    std::vector<Verdict> verdicts;

    bool all_pass() const {
        for (const Verdict& v : verdicts)
            if (!v.pass) return false;
        return true;
    }
    std::string to_json() const;  // deterministic; no timestamps
};

// Full pipeline and the standalone stages. Stages read/write dumps under
// config.out_dir so the expensive ones are reusable.
RunResult run_pipeline(const RunConfig& config);

struct PipelineState {
    RunConfig config;
    MetricField metric;
    EikonalData eikonal;
    SingularPotential potential;
    GluedCounterexample glued;
    std::vector<std::shared_ptr<InterferenceSurface>> surfaces;  // S_n, n = n0..n_max-1
    RunResult result;
};

void stage_verify_eikonal(PipelineState& st);
void stage_build_bands(PipelineState& st);
void stage_find_surfaces(PipelineState& st);   // locate + modify
void stage_assemble(PipelineState& st);        // decay + overlap diagnostics
void stage_certify(PipelineState& st);
void stage_aads_pure(PipelineState& st);
void stage_aads_gncc(PipelineState& st);

PipelineState make_state(const RunConfig& config);
void save_bands(const PipelineState& st);
void load_bands(PipelineState& st);
void save_surfaces(const PipelineState& st);
void load_surfaces(PipelineState& st);
void attach_corrections(PipelineState& st);  // rebuild omega data from beams + surfaces

void emit_reports(const PipelineState& st);
std::string result_schema_json();

}  // namespace ucb
