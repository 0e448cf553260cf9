// qclab: batch driver for the Paneitz/Q-curvature numerical laboratory.
//
// Subcommands run one experiment pipeline each, write CSV data series plus a
// JSON manifest into the output directory, and exit 0 on success, 1 if a
// summary check failed, 2 on configuration errors, 3 on numerical failures,
// 4 on I/O failures. `verify-all` runs the acceptance suite and prints one
// pass/fail line per criterion.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "qclab/experiments.hpp"

namespace {

std::string default_out_dir(const std::string& experiment) {
    const char* root = std::getenv("QCLAB_OUT");
    std::filesystem::path base = root && *root ? root : "qclab_out";
    return (base / experiment).string();
}

int run_one(const qclab::ExperimentRequest& req) {
    try {
        qclab::RunManifest m = qclab::experiments::run(req);
        std::cout << req.name << ": wrote " << m.outputs.size() << " file(s) to " << req.out_dir
                  << "\n";
        for (const auto& c : m.checks)
            std::cout << "  " << (c.pass ? "pass" : "FAIL") << "  " << c.name << " = "
                      << qclab::format_full(c.value) << " (tolerance " << c.tolerance << ")\n";
        return m.all_passed() ? 0 : 1;
    } catch (const qclab::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const qclab::numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const qclab::io_error& e) {
        std::cerr << "i/o failure: " << e.what() << "\n";
        return 4;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Paneitz operator / Q-curvature numerical laboratory"};
    app.require_subcommand(1);

    const std::vector<std::string> experiments{"curvature", "covariance", "lemma31",
                                               "gap",       "kazdan-warner", "flow"};
    struct Common {
        std::string config;
        std::string out;
        std::uint64_t seed = 1234;
        std::vector<std::string> sets;
    };
    std::map<std::string, Common> opts;
    for (const auto& name : experiments) {
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
        Common& c = opts[name];
        sub->add_option("--config", c.config, "flat key=value config file");
        sub->add_option("--out", c.out, "output directory");
        sub->add_option("--seed", c.seed, "random seed for property suites");
        sub->add_option("--set", c.sets, "override a config key (key=value, repeatable)");
    }
    CLI::App* verify = app.add_subcommand("verify-all", "run the acceptance suite");
    Common& vc = opts["verify-all"];
    verify->add_option("--out", vc.out, "output directory for the summary CSV");
    verify->add_option("--set", vc.sets, "override a tolerance (kw_tolerance=..., repeatable)");

    CLI11_PARSE(app, argc, argv);

    for (const auto& name : experiments) {
        if (app.got_subcommand(name)) {
            Common& c = opts[name];
            qclab::ExperimentRequest req{name, c.config, c.sets,
                                         c.out.empty() ? default_out_dir(name) : c.out, c.seed};
            return run_one(req);
        }
    }

    // verify-all
    try {
        qclab::Config cfg(std::map<std::string, std::string>{{"kw_tolerance", "1e-6"}});
        for (const std::string& s : vc.sets) cfg.set(s);
        qclab::acceptance::Options aopt;
        aopt.kw_tolerance = cfg.get_double("kw_tolerance");
        auto rows = qclab::acceptance::run_all(std::cout, aopt);
        bool all = true;
        for (const auto& r : rows) all = all && r.pass;
        if (!vc.out.empty()) {
            qclab::CsvWriter csv({"index", "value", "seconds", "pass"});
            for (std::size_t i = 0; i < rows.size(); ++i)
                csv.add_row({static_cast<double>(i), rows[i].value, rows[i].seconds,
                             rows[i].pass ? 1.0 : 0.0});
            qclab::atomic_write_file(std::filesystem::path(vc.out) / "verify_all.csv",
                                     csv.content());
        }
        return all ? 0 : 1;
    } catch (const qclab::domain_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const qclab::numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const qclab::io_error& e) {
        std::cerr << "i/o failure: " << e.what() << "\n";
        return 4;
    }
}
