#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "ucb/pipeline.hpp"

using namespace ucb;

namespace {

void print_verdicts(const RunResult& result) {
    for (const Verdict& v : result.verdicts)
        std::printf("%-32s %s  value=%.6g  threshold=%.6g\n", v.name.c_str(),
                    v.pass ? "PASS" : "FAIL", v.value, v.threshold);
    std::printf("overall: %s\n", result.all_pass() ? "PASS" : "FAIL");
}

int run_stage(const std::string& stage, const RunConfig& config) {
    PipelineState st = make_state(config);
    if (stage == "full") {
        st.result = run_pipeline(config);
        print_verdicts(st.result);
        return st.result.all_pass() ? 0 : 1;
    }
    if (stage == "verify-eikonal") {
        stage_verify_eikonal(st);
    } else if (stage == "build-bands") {
        stage_verify_eikonal(st);
        stage_build_bands(st);
        save_bands(st);
    } else if (stage == "find-surfaces") {
        load_bands(st);
        stage_find_surfaces(st);
        save_surfaces(st);
    } else if (stage == "assemble") {
        load_bands(st);
        load_surfaces(st);
        attach_corrections(st);
        stage_assemble(st);
    } else if (stage == "certify") {
        load_bands(st);
        load_surfaces(st);
        attach_corrections(st);
        stage_certify(st);
    } else if (stage == "aads-pure") {
        stage_aads_pure(st);
    } else if (stage == "aads-gncc") {
        stage_aads_gncc(st);
    } else {
        std::fprintf(stderr, "unknown stage: %s\n", stage.c_str());
        return 2;
    }
    emit_reports(st);
    print_verdicts(st.result);
    return st.result.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geometric-optics counterexamples to unique continuation for the "
                 "critically singular wave operator box_g + xi / sigma^2"};
    app.require_subcommand(0, 1);

    std::string config_path, out_dir, stage_flag;
    int threads = 0;
    bool strict_alpha = false;
    std::uint64_t seed = 0;
    bool seed_set = false;

    app.add_option("--config", config_path, "run configuration JSON");
    app.add_option("--stage", stage_flag, "stage name (alternative to a subcommand)");
    app.add_option("--out", out_dir, "output directory override");
    app.add_option("--threads", threads, "worker thread count (0 = hardware)");
    app.add_flag("--strict-alpha", strict_alpha, "alpha = 10 paper-faithful mode");
    app.add_option("--seed", seed, "sampling seed override")->each([&](const std::string&) {
        seed_set = true;
    });

    const char* stage_names[] = {"full",     "verify-eikonal", "build-bands", "find-surfaces",
                                 "assemble", "certify",        "aads-pure",   "aads-gncc"};
    for (const char* name : stage_names) app.add_subcommand(name)->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig config;
        if (!config_path.empty()) config = RunConfig::from_json_file(config_path);
        if (!out_dir.empty()) config.out_dir = out_dir;
        if (threads > 0) config.threads = threads;
        if (strict_alpha) config.exponents.alpha = 10.0;
        if (seed_set) config.seed = seed;

        std::string stage = stage_flag.empty() ? "full" : stage_flag;
        for (const auto* sub : app.get_subcommands())
            stage = sub->get_name();

        return run_stage(stage, config);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
