// stacklab: solve, sweep, verify, and limit analysis for the incentive-design
// games. Exit codes: 0 success, 1 usage error, 2 degenerate game, 3
// certification failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stacklab/major_solver.hpp"
#include "stacklab/pn_solver.hpp"
#include "stacklab/verifier.hpp"

using namespace stacklab;
using nlohmann::ordered_json;

namespace {

struct SpecArgs {
    std::string game;  // "pn" or "maj"
    std::string spec_file;
    std::optional<double> r0, q0, r, q, rM, qM, qhat0;
    std::optional<int> n;
    bool zero_loss = false;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--game", game, "game family: pn or maj")->required();
        cmd->add_option("--spec", spec_file, "game spec JSON file");
        cmd->add_option("--r0", r0, "leader control weight");
        cmd->add_option("--q0", q0, "leader tracking weight");
        cmd->add_option("--r", r, "follower/minor control weight");
        cmd->add_option("--q", q, "follower/minor tracking weight");
        cmd->add_option("--rM", rM, "major control weight");
        cmd->add_option("--qM", qM, "major tracking weight");
        cmd->add_option("--qhat0", qhat0, "leader cross-term weight");
        cmd->add_option("--n", n, "population size");
        cmd->add_flag("--zero-loss", zero_loss, "shared-observation zero-loss variant");
    }

    bool inline_given() const {
        return r0 || q0 || r || q || rM || qM || qhat0;
    }

    std::string read_file() const {
        std::ifstream in(spec_file);
        if (!in) throw std::invalid_argument("cannot open spec file: " + spec_file);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    PnGameSpec pn() const {
        if (!spec_file.empty() == inline_given())
            throw std::invalid_argument("provide exactly one of --spec or inline weights");
        PnGameSpec s;
        if (!spec_file.empty()) {
            s = pn_spec_from_json(read_file());
        } else {
            if (!(r0 && q0 && r && q))
                throw std::invalid_argument("pn game needs --r0 --q0 --r --q");
            s.r0 = *r0;
            s.q0 = *q0;
            s.r = *r;
            s.q = *q;
        }
        if (n) s.n = *n;
        s.validate();
        return s;
    }

    MajGameSpec maj() const {
        if (!spec_file.empty() == inline_given())
            throw std::invalid_argument("provide exactly one of --spec or inline weights");
        MajGameSpec s;
        if (!spec_file.empty()) {
            s = maj_spec_from_json(read_file());
        } else {
            if (!(r0 && r && rM && qM))
                throw std::invalid_argument("maj game needs --r0 --r --rM --qM");
            s.r0 = *r0;
            s.r = *r;
            s.rM = *rM;
            s.qM = *qM;
            s.q0 = q0.value_or(0.0);
            s.q = q.value_or(0.0);
            s.qhat0 = qhat0.value_or(0.0);
        }
        if (n) s.n = *n;
        if (zero_loss) s.shared_obs = true;
        s.validate();
        return s;
    }
};

std::vector<int> parse_grid(const std::string& text) {
    std::vector<int> grid;
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const int lo = std::stoi(text.substr(0, dots));
        const int hi = std::stoi(text.substr(dots + 2));
        for (int i = lo; i <= hi; ++i) grid.push_back(i);
    } else {
        std::stringstream ss(text);
        std::string tok;
        while (std::getline(ss, tok, ',')) grid.push_back(std::stoi(tok));
    }
    if (grid.empty()) throw std::invalid_argument("empty n grid");
    for (size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1])
            throw std::invalid_argument("n grid must be strictly increasing");
    return grid;
}

uint64_t default_seed() {
    if (const char* env = std::getenv("STACKLAB_SEED")) return std::strtoull(env, nullptr, 10);
    return 1;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::invalid_argument("cannot open output file: " + out_path);
        out << text;
    }
}

ordered_json view_json(const EquilibriumSolution& view) {
    ordered_json j;
    j["n"] = view.n;
    ordered_json params;
    for (const auto& [k, v] : view.params) params[k] = v;
    j["params"] = params;
    ordered_json res;
    for (const auto& [k, v] : view.residuals) res[k] = v;
    j["residuals"] = res;
    return j;
}

int cmd_solve(const SpecArgs& args, bool hat, const std::string& out_path) {
    ordered_json j;
    if (args.game == "pn") {
        const PnGameSpec spec = args.pn();
        const PnSolution sol = pn_solve(spec);
        j["game"] = "pn";
        j["spec"] = ordered_json::parse(to_json(spec));
        j.update(view_json(pn_solution_view(spec, sol)));
    } else if (args.game == "maj") {
        const MajGameSpec spec = args.maj();
        j["spec"] = ordered_json::parse(to_json(spec));
        if (spec.shared_obs) {
            const ZeroLossSolution z = zero_loss_solve(spec);
            j["game"] = "maj-zero-loss";
            ordered_json params;
            params["theta"] = z.theta;
            params["thetaM"] = z.thetaM;
            params["beta"] = z.beta;
            if (z.gain) params["gain"] = *z.gain;
            else params["gain_degenerate"] = true;
            j["n"] = z.n;
            j["params"] = params;
            const MajLoss loss = maj_loss(spec);
            j["loss"] = loss.loss;
        } else if (hat) {
            const MajHatSolution h = maj_leader_optimal(spec);
            j["game"] = "maj-hat";
            j.update(view_json(maj_hat_solution_view(spec, h)));
        } else {
            const MajSolution sol = maj_solve(spec);
            j["game"] = "maj";
            j.update(view_json(maj_solution_view(spec, sol)));
        }
    } else {
        throw std::invalid_argument("--game must be pn or maj");
    }
    emit(j.dump(2), out_path);
    return 0;
}

int cmd_sweep(const SpecArgs& args, const std::string& curve, const std::string& grid_text,
              const std::string& out_path) {
    const auto grid = parse_grid(grid_text);
    std::string csv;
    if (args.game == "pn") {
        if (curve != "gain")
            throw std::invalid_argument("pn sweep supports --curve gain");
        csv = pn_sweep_csv(args.pn(), grid);
    } else if (args.game == "maj") {
        const MajGameSpec spec = args.maj();
        if (curve == "gain")
            csv = maj_sweep_csv(spec, grid);
        else if (curve == "loss")
            csv = maj_loss_csv(spec, grid);
        else
            throw std::invalid_argument("maj sweep supports --curve gain|loss");
    } else {
        throw std::invalid_argument("--game must be pn or maj");
    }
    emit(csv, out_path);
    return 0;
}

int cmd_verify(const SpecArgs& args, uint64_t seed, long long samples, bool zero_gain,
               const std::string& out_path) {
    CertifyOptions opt;
    opt.mc.seed = seed;
    opt.mc.samples = samples;
    opt.zero_gain = zero_gain;

    CertificationReport rep;
    if (args.game == "pn") {
        const PnGameSpec spec = args.pn();
        rep = certify_incentive(spec, pn_solve(spec), opt);
    } else if (args.game == "maj") {
        const MajGameSpec spec = args.maj();
        if (spec.shared_obs)
            rep = certify_zero_loss(spec, zero_loss_solve(spec), opt);
        else
            rep = certify_incentive(spec, maj_solve(spec), opt);
    } else {
        throw std::invalid_argument("--game must be pn or maj");
    }
    emit(rep.to_json(), out_path);
    return rep.pass ? 0 : 3;
}

int cmd_limits(const SpecArgs& args, const std::string& out_path) {
    ordered_json j;
    if (args.game == "pn") {
        const PnGameSpec spec = args.pn();
        const PnLimits l = pn_limits(spec);
        j["game"] = "pn";
        j["spec"] = ordered_json::parse(to_json(spec));
        // No gain field: the incentive-gain sequence has no finite limit here.
        j["limits"] = {{"alpha0_inf", l.alpha0_inf},
                       {"beta_inf", l.beta_inf},
                       {"alpha_inf", l.alpha_inf}};
        j["gain_growth_ratio"] = pn_asymptotic_gain_ratio(spec);
    } else if (args.game == "maj") {
        const MajGameSpec spec = args.maj();
        const MajLimits l = maj_limits(spec);
        j["game"] = "maj";
        j["spec"] = ordered_json::parse(to_json(spec));
        j["limits"] = {{"theta_inf", l.theta},  {"thetaM_inf", l.thetaM},
                       {"beta_inf", l.beta},    {"alpha_inf", l.alpha},
                       {"alphaM_inf", l.alphaM}, {"gain_inf", l.gain},
                       {"L_inf", l.L}};
        std::ostringstream desc;
        desc.precision(12);
        desc << "mean minor action -> " << l.alpha << "*omega0 + " << l.alphaM << "*yM";
        j["mean_minor_action"] = desc.str();
    } else {
        throw std::invalid_argument("--game must be pn or maj");
    }
    emit(j.dump(2), out_path);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stacklab: incentive-design equilibrium solver and verifier"};
    app.require_subcommand(1);

    SpecArgs solve_args, sweep_args, verify_args, limits_args;
    std::string out_path, sweep_out, verify_out, limits_out;
    bool hat = false;

    auto* solve = app.add_subcommand("solve", "solve one game instance");
    solve_args.add_to(solve);
    solve->add_flag("--hat", hat, "maj: solve the leader-optimal (hat) system");
    solve->add_option("--out", out_path, "write JSON here instead of stdout");

    std::string curve = "gain", grid_text;
    auto* sweep = app.add_subcommand("sweep", "sweep a grid of population sizes");
    sweep_args.add_to(sweep);
    sweep->add_option("--curve", curve, "gain or loss");
    sweep->add_option("--grid", grid_text, "comma list (10,100,1000) or range (1..50)")->required();
    sweep->add_option("--out", sweep_out, "write CSV here instead of stdout");

    uint64_t seed = default_seed();
    long long samples = 1000000;
    bool zero_gain = false;
    auto* verify = app.add_subcommand("verify", "certify the incentive equilibrium");
    verify_args.add_to(verify);
    verify->add_option("--seed", seed, "Monte Carlo seed (default STACKLAB_SEED or 1)");
    verify->add_option("--samples", samples, "Monte Carlo samples");
    verify->add_flag("--zero-gain", zero_gain, "overwrite the gain with 0 (expected to fail)");
    verify->add_option("--out", verify_out, "write JSON here instead of stdout");

    auto* limits = app.add_subcommand("limits", "mean-field limit parameters");
    limits_args.add_to(limits);
    limits->add_option("--out", limits_out, "write JSON here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (solve->parsed()) return cmd_solve(solve_args, hat, out_path);
        if (sweep->parsed()) return cmd_sweep(sweep_args, curve, grid_text, sweep_out);
        if (verify->parsed()) return cmd_verify(verify_args, seed, samples, zero_gain, verify_out);
        if (limits->parsed()) return cmd_limits(limits_args, limits_out);
    } catch (const degenerate_error& e) {
        std::cerr << "degenerate game: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
