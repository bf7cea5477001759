#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rbcert/commands.hpp"

namespace {

// "--mu 1,2.5,3" -> {1, 2.5, 3}
std::vector<double> parse_mu(const std::string& text) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) {
            throw CLI::ValidationError("--mu", "'" + text + "' is not a comma-separated list of numbers");
        }
        values.push_back(v);
    }
    return values;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Certified reduced-basis toolkit.\n"
                 "Exit codes: 0 success, 1 invalid config or input, 2 numerical failure\n"
                 "(coercivity loss, aborted greedy, rigor violation)."};
    app.require_subcommand(1);

    rbcert::CommandOptions options;
    std::string config;
    std::string model;
    std::string out;
    std::string basis;
    std::vector<std::string> mus;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--threads", options.threads, "worker threads for parameter sweeps")
            ->default_val(1)
            ->check(CLI::PositiveNumber);
        sub->add_option("--out", out, "output directory (overrides output.directory)");
    };

    auto* offline = app.add_subcommand("offline", "greedy training; writes model.json, basis.json and traces");
    offline->add_option("--config", config, "run config (JSON)")->required();
    add_common(offline);

    auto* online = app.add_subcommand("online", "certified reduced solves; one JSON record per --mu");
    online->add_option("--model", model, "model.json")->required();
    online->add_option("--mu", mus, "parameter v1,v2,... (repeatable)")->required();
    online->add_flag("--lift", options.lift, "also write the lifted state V u_N as CSV");
    online->add_option("--basis", basis, "basis.json (default: next to the model)");
    add_common(online);

    auto* validate = app.add_subcommand("validate", "rigor and effectivity audit against truth solves");
    validate->add_option("--model", model, "model.json")->required();
    validate->add_option("--config", config, "run config used to rebuild the truth problem")->required();
    validate->add_option("--basis", basis, "basis.json (default: next to the model)");
    add_common(validate);

    auto* nwidth = app.add_subcommand("nwidth-demo", "advection N-width report and thermal-block contrast");
    nwidth->add_option("--config", config, "run config (JSON)")->required();
    add_common(nwidth);

    auto* pod_greedy = app.add_subcommand("pod-greedy", "POD-Greedy training for the parabolic problem");
    pod_greedy->add_option("--config", config, "run config (JSON)")->required();
    add_common(pod_greedy);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : rbcert::kExitConfig;
    }
    if (!out.empty()) {
        options.out = out;
    }
    if (!basis.empty()) {
        options.basis = basis;
    }

    const rbcert::Streams io{std::cout, std::cerr};
    if (offline->parsed()) {
        return rbcert::cmd_offline(config, options, io);
    }
    if (online->parsed()) {
        std::vector<std::vector<double>> values;
        try {
            for (const auto& m : mus) {
                values.push_back(parse_mu(m));
            }
        } catch (const CLI::ValidationError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return rbcert::kExitConfig;
        }
        return rbcert::cmd_online(model, values, options, io);
    }
    if (validate->parsed()) {
        return rbcert::cmd_validate(model, config, options, io);
    }
    if (nwidth->parsed()) {
        return rbcert::cmd_nwidth_demo(config, options, io);
    }
    return rbcert::cmd_pod_greedy(config, options, io);
}
