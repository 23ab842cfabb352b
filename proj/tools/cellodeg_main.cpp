// Scenario runner: `cellodeg run <config>` executes one scenario, `cellodeg
// sweep <configs...>` fans independent scenarios out over worker threads.
// Exit codes: 0 ok, 1 domain error, 2 usage error.

#include <atomic>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cellodeg/scenario.hpp"

namespace fs = std::filesystem;

namespace {

struct Overrides {
    double rel_tol = -1;
    double abs_tol = -1;
};

int run_one(const std::string& config, const std::string& out_dir, const Overrides& ov,
            std::ostream& log) {
    fs::path cfg_path(config);
    if (!fs::exists(cfg_path)) {
        log << "error: config not found: " << config << "\n";
        return 2;
    }
    try {
        cellodeg::Scenario sc = cellodeg::parse_scenario(config);
        if (ov.rel_tol > 0) sc.ctrl.rel_tol = ov.rel_tol;
        if (ov.abs_tol > 0) sc.ctrl.abs_tol = ov.abs_tol;
        fs::path dir = out_dir.empty() ? cfg_path.stem().string() + std::string("_out")
                                       : fs::path(out_dir);
        cellodeg::run_scenario(sc, dir);
        log << config << ": ok -> " << dir.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        log << config << ": error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cellulose biodegradation population models: scenario runner"};
    app.require_subcommand(1);

    Overrides ov;
    std::string config, out_dir;
    auto* run = app.add_subcommand("run", "execute one scenario config");
    run->add_option("config", config, "scenario config file (JSON)")->required();
    run->add_option("--out", out_dir, "output directory (default: <config stem>_out)");
    run->add_option("--rel-tol", ov.rel_tol, "override integrator relative tolerance");
    run->add_option("--abs-tol", ov.abs_tol, "override integrator absolute tolerance");

    std::vector<std::string> configs;
    int jobs = 1;
    auto* sweep = app.add_subcommand("sweep", "execute many scenario configs concurrently");
    sweep->add_option("configs", configs, "scenario config files (shell-expanded glob)")
        ->required();
    sweep->add_option("--jobs", jobs, "worker threads")->default_val(1);
    sweep->add_option("--rel-tol", ov.rel_tol, "override integrator relative tolerance");
    sweep->add_option("--abs-tol", ov.abs_tol, "override integrator absolute tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (run->parsed()) return run_one(config, out_dir, ov, std::cout);

    // sweep: independent scenarios, per-config output directories
    if (jobs < 1) jobs = 1;
    std::atomic<std::size_t> next{0};
    std::atomic<int> worst{0};
    std::mutex io;
    auto worker = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= configs.size()) return;
            std::ostringstream local;
            const int code = run_one(configs[k], "", ov, local);
            {
                std::lock_guard<std::mutex> lock(io);
                std::cout << local.str();
            }
            int cur = worst.load();
            while (code > cur && !worst.compare_exchange_weak(cur, code)) {
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return worst.load();
}
