#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "meanrev/double_stopping.hpp"
#include "meanrev/mc_oracle.hpp"
#include "meanrev/ou_process.hpp"
#include "meanrev/stoploss.hpp"
#include "meanrev/verify.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

// shortest round-trip formatting, locale independent
std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    std::array<char, 32> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

ordered_json jnum(double v) {
    return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

struct run_config {
    meanrev::model_params model;
    meanrev::discount_spec disc;
    std::optional<double> stop_loss;
    std::optional<double> relative_ell;
    meanrev::quad_config quad;
    meanrev::mc_config mc;
    bool mc_given = false;
    std::string output_dir = ".";
};

double need_number(const ordered_json& j, const char* section, const char* key) {
    if (!j.contains(key))
        throw meanrev::input_error(std::string("config: ") + section + "." + key + " is required");
    if (!j.at(key).is_number())
        throw meanrev::input_error(std::string("config: ") + section + "." + key +
                                   " must be a number");
    return j.at(key).get<double>();
}

run_config parse_config(const ordered_json& doc) {
    // solve output re-ingests through its embedded config block
    const ordered_json& j = doc.contains("config") ? doc.at("config") : doc;
    if (!j.contains("model") || !j.contains("discount"))
        throw meanrev::input_error("config: model and discount sections are required");

    run_config cfg;
    const auto& m = j.at("model");
    cfg.model.theta = need_number(m, "model", "theta");
    cfg.model.mu = need_number(m, "model", "mu");
    cfg.model.sigma = need_number(m, "model", "sigma");
    const auto& d = j.at("discount");
    cfg.disc.r = need_number(d, "discount", "r");
    cfg.disc.r_hat = need_number(d, "discount", "r_hat");
    cfg.disc.c = need_number(d, "discount", "c");
    cfg.disc.c_hat = need_number(d, "discount", "c_hat");
    if (j.contains("stop_loss") && !j.at("stop_loss").is_null())
        cfg.stop_loss = j.at("stop_loss").get<double>();
    if (j.contains("relative_ell") && !j.at("relative_ell").is_null())
        cfg.relative_ell = j.at("relative_ell").get<double>();
    if (cfg.stop_loss && cfg.relative_ell)
        throw meanrev::input_error("config: stop_loss and relative_ell are mutually exclusive");
    if (j.contains("quadrature")) {
        const auto& q = j.at("quadrature");
        if (q.contains("abs_tol")) cfg.quad.abs_tol = q.at("abs_tol").get<double>();
        if (q.contains("rel_tol")) cfg.quad.rel_tol = q.at("rel_tol").get<double>();
        if (q.contains("max_panels")) cfg.quad.max_panels = q.at("max_panels").get<int>();
    }
    if (j.contains("mc")) {
        cfg.mc_given = true;
        const auto& mc = j.at("mc");
        if (mc.contains("n_paths")) cfg.mc.n_paths = mc.at("n_paths").get<std::size_t>();
        if (mc.contains("dt")) cfg.mc.dt = mc.at("dt").get<double>();
        if (mc.contains("horizon_eps")) cfg.mc.horizon_eps = mc.at("horizon_eps").get<double>();
        if (mc.contains("seed")) cfg.mc.seed = mc.at("seed").get<std::uint64_t>();
    }
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    cfg.model.validate();
    cfg.disc.validate();
    cfg.quad.validate();
    cfg.mc.validate();
    return cfg;
}

run_config load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw meanrev::input_error("cannot open config: " + path);
    ordered_json doc;
    try {
        f >> doc;
    } catch (const std::exception& e) {
        throw meanrev::input_error(path + ": " + e.what());
    }
    return parse_config(doc);
}

ordered_json config_json(const run_config& cfg) {
    ordered_json j;
    j["model"] = {{"theta", cfg.model.theta}, {"mu", cfg.model.mu}, {"sigma", cfg.model.sigma}};
    j["discount"] = {{"r", cfg.disc.r},
                     {"r_hat", cfg.disc.r_hat},
                     {"c", cfg.disc.c},
                     {"c_hat", cfg.disc.c_hat}};
    if (cfg.stop_loss) j["stop_loss"] = *cfg.stop_loss;
    if (cfg.relative_ell) j["relative_ell"] = *cfg.relative_ell;
    j["quadrature"] = {{"abs_tol", cfg.quad.abs_tol},
                       {"rel_tol", cfg.quad.rel_tol},
                       {"max_panels", cfg.quad.max_panels}};
    j["mc"] = {{"n_paths", cfg.mc.n_paths},
               {"dt", cfg.mc.dt},
               {"horizon_eps", cfg.mc.horizon_eps},
               {"seed", cfg.mc.seed}};
    j["output_dir"] = cfg.output_dir;
    return j;
}

void write_json(const fs::path& path, const ordered_json& j) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw meanrev::input_error("cannot write " + path.string());
    f << j.dump(2) << "\n";
}

// common per-subcommand flags; presence tracked through std::optional
struct common_flags {
    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<double> stop_loss;
    std::optional<double> ell;
};

void add_common(CLI::App* cmd, common_flags& c) {
    cmd->add_option("--config", c.config_path, "run configuration JSON")->required();
    cmd->add_option("--out", c.out, "output directory (overrides config)");
    cmd->add_option("--seed", c.seed, "MC seed (overrides config)");
    cmd->add_option("--stop-loss", c.stop_loss, "absolute stop-loss level (overrides config)");
    cmd->add_option("--ell", c.ell, "relative stop-loss offset (overrides config)");
}

run_config resolve_config(const common_flags& c) {
    run_config cfg = load_config(c.config_path);
    if (c.out) cfg.output_dir = *c.out;
    if (c.seed) {
        cfg.mc.seed = *c.seed;
        cfg.mc_given = true;
    }
    if (c.stop_loss && c.ell)
        throw meanrev::input_error("--stop-loss and --ell are mutually exclusive");
    if (c.stop_loss) {
        cfg.stop_loss = *c.stop_loss;
        cfg.relative_ell.reset();
    }
    if (c.ell) {
        cfg.relative_ell = *c.ell;
        cfg.stop_loss.reset();
    }
    return cfg;
}

// ---- CSV ingestion ----

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

bool valid_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (s[i] < '0' || s[i] > '9') return false;
    const int y = std::stoi(s.substr(0, 4));
    const unsigned m = static_cast<unsigned>(std::stoi(s.substr(5, 2)));
    const unsigned d = static_cast<unsigned>(std::stoi(s.substr(8, 2)));
    return (std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}).ok();
}

double parse_price(const std::string& s, const std::string& path, std::size_t line_no,
                   const char* col) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v))
        throw meanrev::input_error(path + ":" + std::to_string(line_no) + ": bad " + col +
                                   " value '" + s + "'");
    return v;
}

struct pair_data {
    meanrev::price_series s1, s2;
};

pair_data read_pair_csv(const std::string& path, double dt) {
    std::ifstream f(path);
    if (!f) throw meanrev::input_error("cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw meanrev::input_error(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto head = split_csv(line);
    const std::vector<std::string> want = {"date", "price1", "price2"};
    if (head != want) {
        if (head.size() == 2 && head[0] == "date")
            throw meanrev::input_error(path + ":1: missing column price2 (header must be "
                                              "date,price1,price2)");
        throw meanrev::input_error(path + ":1: header must be date,price1,price2");
    }
    pair_data out;
    out.s1.dt = out.s2.dt = dt;
    std::size_t line_no = 1;
    std::string prev_date;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 3)
            throw meanrev::input_error(path + ":" + std::to_string(line_no) +
                                       ": expected 3 fields, got " + std::to_string(cells.size()));
        if (!valid_iso_date(cells[0]))
            throw meanrev::input_error(path + ":" + std::to_string(line_no) + ": bad date '" +
                                       cells[0] + "' (ISO-8601 yyyy-mm-dd)");
        if (!prev_date.empty() && cells[0] <= prev_date)
            throw meanrev::input_error(path + ":" + std::to_string(line_no) +
                                       ": dates must be strictly increasing");
        prev_date = cells[0];
        out.s1.dates.push_back(cells[0]);
        out.s2.dates.push_back(cells[0]);
        out.s1.values.push_back(parse_price(cells[1], path, line_no, "price1"));
        out.s2.values.push_back(parse_price(cells[2], path, line_no, "price2"));
    }
    out.s1.validate();
    out.s2.validate();
    return out;
}

// ---- subcommands ----

int cmd_calibrate(const std::string& csv_path, double a_cash, double b_min, double b_max,
                  double b_step, double dt, const std::string& out_dir) {
    const auto pair = read_pair_csv(csv_path, dt);
    if (!(b_step > 0.0) || !(b_min > 0.0) || b_max < b_min)
        throw meanrev::input_error("calibrate: need 0 < b-min <= b-max and b-step > 0");
    std::vector<double> grid;
    const auto count = static_cast<std::size_t>(std::floor((b_max - b_min) / b_step + 1e-9)) + 1;
    grid.reserve(count);
    for (std::size_t i = 0; i < count; ++i) grid.push_back(b_min + static_cast<double>(i) * b_step);

    const auto sel = meanrev::select_beta_star(pair.s1, pair.s2, a_cash, grid);

    fs::create_directories(out_dir);
    std::ofstream curve(fs::path(out_dir) / "beta_curve.csv", std::ios::binary);
    curve << "B,avg_loglik\n";
    for (const auto& row : sel.curve) curve << fmt(row.b) << "," << fmt(row.avg_loglik) << "\n";

    ordered_json j;
    j["theta"] = sel.fit.params.theta;
    j["mu"] = sel.fit.params.mu;
    j["sigma"] = sel.fit.params.sigma;
    j["avg_loglik"] = sel.fit.avg_loglik;
    j["beta_star"] = sel.b_star;
    j["n"] = pair.s1.values.size();
    j["dt"] = dt;
    write_json(fs::path(out_dir) / "calibration.json", j);

    std::cout << "B* = " << fmt(sel.b_star) << ", theta = " << fmt(sel.fit.params.theta)
              << ", mu = " << fmt(sel.fit.params.mu) << ", sigma = " << fmt(sel.fit.params.sigma)
              << ", avg_loglik = " << fmt(sel.fit.avg_loglik) << "\n";
    return 0;
}

int cmd_solve(const run_config& cfg) {
    const meanrev::problem pr{cfg.model, cfg.disc, cfg.quad};
    const double sd = cfg.model.stationary_sd();
    fs::create_directories(cfg.output_dir);

    ordered_json out;
    out["config"] = config_json(cfg);
    ordered_json res;

    const std::size_t n_grid = 1001;
    const double glo = cfg.model.theta - 4.0 * sd, ghi = cfg.model.theta + 4.0 * sd;
    auto grid_x = [&](std::size_t i) {
        return glo + (ghi - glo) * static_cast<double>(i) / static_cast<double>(n_grid - 1);
    };

    std::ofstream vf(fs::path(cfg.output_dir) / "value_functions.csv", std::ios::binary);

    if (cfg.stop_loss) {
        const auto sol = meanrev::solve_stoploss(*cfg.stop_loss, pr);
        res["mode"] = "stop_loss";
        res["L"] = sol.exit.L;
        res["L_star"] = sol.exit.L_star;
        res["degenerate_exit"] = sol.exit.degenerate;
        res["b_L"] = jnum(sol.exit.degenerate ? std::nan("") : sol.exit.b_L);
        res["C"] = jnum(sol.exit.degenerate ? std::nan("") : sol.exit.C);
        res["D"] = jnum(sol.exit.degenerate ? std::nan("") : sol.exit.D);
        res["trivial_entry"] = sol.entry.trivial;
        res["a_L"] = jnum(sol.entry.a_L);
        res["d_L"] = jnum(sol.entry.d_L);
        res["P"] = jnum(sol.entry.trivial ? std::nan("") : sol.entry.P);
        res["Q"] = jnum(sol.entry.trivial ? std::nan("") : sol.entry.Q);
        vf << "x,V_L,J_L\n";
        for (std::size_t i = 0; i < n_grid; ++i) {
            const double x = grid_x(i);
            vf << fmt(x) << "," << fmt(meanrev::value_VL(x, sol.exit, pr)) << ","
               << fmt(meanrev::value_JL(x, sol.exit, sol.entry, pr)) << "\n";
        }
        std::cout << (sol.exit.degenerate
                          ? "degenerate exit: L >= L*, V_L = x - c"
                          : "b_L = " + fmt(sol.exit.b_L) +
                                (sol.entry.trivial
                                     ? ", entry trivial"
                                     : ", a_L = " + fmt(sol.entry.a_L) +
                                           ", d_L = " + fmt(sol.entry.d_L)))
                  << "\n";
    } else if (cfg.relative_ell) {
        const auto base = meanrev::solve_thresholds(pr);
        const auto rel = meanrev::solve_relative_stoploss(*cfg.relative_ell, pr);
        res["mode"] = "relative_stop_loss";
        res["L_star"] = base.L_star;
        res["b_star"] = base.exit.b_star;
        res["d_star"] = base.entry.d_star;
        res["ell"] = rel.ell;
        res["trivial_entry"] = rel.trivial;
        res["rel_d_star"] = jnum(rel.d_star);
        res["rel_stop_level"] = jnum(rel.stop_level);
        res["rel_b_star"] = jnum(rel.b_star);
        vf << "x,V,J\n";
        for (std::size_t i = 0; i < n_grid; ++i) {
            const double x = grid_x(i);
            vf << fmt(x) << "," << fmt(meanrev::value_V(x, base.exit, pr)) << ","
               << fmt(meanrev::value_J(x, base.exit, base.entry, pr)) << "\n";
        }
        std::ofstream rf(fs::path(cfg.output_dir) / "relative_value.csv", std::ios::binary);
        rf << "x,V_ell,J_ell\n";
        for (std::size_t i = 0; i < rel.x.size(); ++i)
            rf << fmt(rel.x[i]) << "," << fmt(rel.v_ell[i]) << "," << fmt(rel.j_ell[i]) << "\n";
        std::cout << (rel.trivial ? std::string("relative entry trivial")
                                  : "rel_d_star = " + fmt(rel.d_star) +
                                        ", stop = " + fmt(rel.stop_level) +
                                        ", rel_b_star = " + fmt(rel.b_star))
                  << "\n";
    } else {
        const auto sol = meanrev::solve_thresholds(pr);
        res["mode"] = "standard";
        res["L_star"] = sol.L_star;
        res["b_star"] = sol.exit.b_star;
        res["K"] = sol.exit.K;
        res["d_star"] = sol.entry.d_star;
        res["d_bar"] = sol.entry.d_bar;
        res["Q_hat"] = sol.entry.Q_hat;
        res["x_star"] = sol.roots.x_star;
        res["b_under"] = sol.roots.b_under;
        vf << "x,V,J\n";
        for (std::size_t i = 0; i < n_grid; ++i) {
            const double x = grid_x(i);
            vf << fmt(x) << "," << fmt(meanrev::value_V(x, sol.exit, pr)) << ","
               << fmt(meanrev::value_J(x, sol.exit, sol.entry, pr)) << "\n";
        }
        std::cout << "b_star = " << fmt(sol.exit.b_star) << ", d_star = " << fmt(sol.entry.d_star)
                  << "\n";
    }

    out["results"] = res;
    write_json(fs::path(cfg.output_dir) / "thresholds.json", out);
    return 0;
}

int cmd_sweep_l(const run_config& cfg, std::optional<double> l_min, std::optional<double> l_max,
                std::size_t l_count) {
    const meanrev::problem pr{cfg.model, cfg.disc, cfg.quad};
    const double ls = meanrev::l_star(pr);
    const double sd = cfg.model.stationary_sd();
    fs::create_directories(cfg.output_dir);
    std::ofstream csv(fs::path(cfg.output_dir) / "sweep_l.csv", std::ios::binary);
    csv << "L,b_L\n";
    if (l_count == 0) return 0;

    const double lo = l_min.value_or(ls - 2.0 * sd);
    const double hi = l_max.value_or(ls - 1e-9);
    std::vector<double> grid;
    grid.reserve(l_count);
    for (std::size_t i = 0; i < l_count; ++i)
        grid.push_back(l_count == 1 ? lo
                                    : lo + (hi - lo) * static_cast<double>(i) /
                                               static_cast<double>(l_count - 1));

    const auto sw = meanrev::sweep_stop_loss(grid, pr);
    for (const auto& w : sw.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& row : sw.rows) csv << fmt(row.L) << "," << fmt(row.b_L) << "\n";
    std::cout << "swept " << grid.size() << " levels, L* = " << fmt(ls) << "\n";
    return 0;
}

int cmd_simulate(const run_config& cfg, std::optional<double> x0_opt, std::size_t n_display) {
    const meanrev::problem pr{cfg.model, cfg.disc, cfg.quad};
    const auto& p = cfg.model;
    const double x0 = x0_opt.value_or(p.theta);
    fs::create_directories(cfg.output_dir);
    const fs::path paths_path = fs::path(cfg.output_dir) / "paths.csv";
    const fs::path report_path = fs::path(cfg.output_dir) / "report.json";

    meanrev::policy_spec pol;
    ordered_json jpol;
    bool report_only = false;
    ordered_json early;

    if (cfg.stop_loss) {
        const auto sol = meanrev::solve_stoploss(*cfg.stop_loss, pr);
        if (sol.exit.degenerate) {
            early["degenerate_exit"] = true;
            early["estimate"] = x0 - cfg.disc.c;
            report_only = true;
        } else {
            pol.exit_upper = sol.exit.b_L;
            pol.stop_loss = sol.exit.L;
            if (!sol.entry.trivial) {
                pol.entry_lower = sol.entry.a_L;
                pol.entry_upper = sol.entry.d_L;
            }
        }
    } else if (cfg.relative_ell) {
        const auto rel = meanrev::solve_relative_stoploss(*cfg.relative_ell, pr);
        if (rel.trivial) {
            early["trivial_entry"] = true;
            early["estimate"] = 0.0;
            report_only = true;
        } else {
            pol.entry_upper = rel.d_star;
            pol.exit_upper = rel.b_star;
            pol.stop_loss = rel.stop_level;
        }
    } else {
        const auto sol = meanrev::solve_thresholds(pr);
        pol.entry_upper = sol.entry.d_star;
        pol.exit_upper = sol.exit.b_star;
    }

    std::ofstream paths(paths_path, std::ios::binary);
    paths << "path,step,t,x,position,event\n";

    if (report_only) {
        write_json(report_path, early);
        std::cout << "report-only: " << early.dump() << "\n";
        return 0;
    }

    jpol["entry_lower"] = pol.entry_lower ? jnum(*pol.entry_lower) : ordered_json(nullptr);
    jpol["entry_upper"] = pol.entry_upper ? jnum(*pol.entry_upper) : ordered_json(nullptr);
    jpol["exit_upper"] = pol.exit_upper;
    jpol["stop_loss"] = pol.stop_loss ? jnum(*pol.stop_loss) : ordered_json(nullptr);

    // display paths reuse the estimator's per-path streams
    const double dt = cfg.mc.resolved_dt(p);
    const double a = std::exp(-p.mu * dt);
    const double step_sd = p.sigma * std::sqrt((1.0 - a * a) / (2.0 * p.mu));
    const double horizon = std::log(1.0 / cfg.mc.horizon_eps) / cfg.disc.r_hat;
    const auto max_steps = static_cast<std::size_t>(std::ceil(horizon / dt));
    const double ent_lo = pol.entry_lower.value_or(-std::numeric_limits<double>::infinity());
    const double stop = pol.stop_loss.value_or(-std::numeric_limits<double>::infinity());

    for (std::size_t k = 0; k < n_display; ++k) {
        meanrev::normal_source z(meanrev::path_seed(cfg.mc.seed, k));
        double x = x0;
        bool held = !pol.entry_upper.has_value();
        std::string event;
        if (pol.entry_upper && x0 >= ent_lo && x0 <= *pol.entry_upper) {
            held = true;
            event = "entry";
        }
        paths << k << ",0,0," << fmt(x) << "," << (held ? 1 : 0) << "," << event << "\n";
        for (std::size_t s = 1; s <= max_steps; ++s) {
            x = p.theta + (x - p.theta) * a + step_sd * z();
            event.clear();
            bool done = false;
            if (!held) {
                if (x >= ent_lo && x <= *pol.entry_upper) {
                    held = true;
                    event = "entry";
                }
            } else if (x >= pol.exit_upper) {
                event = "exit";
                done = true;
            } else if (x <= stop) {
                event = "stop";
                done = true;
            }
            if (!done && s == max_steps) event = "truncated";
            paths << k << "," << s << "," << fmt(static_cast<double>(s) * dt) << "," << fmt(x)
                  << "," << (held ? 1 : 0) << "," << event << "\n";
            if (done) break;
        }
    }

    const auto rep = meanrev::estimate_policy_value(x0, pol, p, cfg.disc, cfg.mc);
    ordered_json j;
    j["x0"] = x0;
    j["policy"] = jpol;
    j["estimate"] = rep.estimate;
    j["std_error"] = rep.std_error;
    j["bias_bound"] = rep.bias_bound;
    j["n_paths"] = rep.n_paths;
    j["n_truncated"] = rep.n_truncated;
    j["dt"] = rep.dt;
    write_json(report_path, j);
    std::cout << "estimate = " << fmt(rep.estimate) << " +- " << fmt(rep.std_error) << " ("
              << rep.n_paths << " paths)\n";
    return 0;
}

int cmd_verify(const run_config& cfg, double perturb_b, bool no_mc) {
    const meanrev::problem pr{cfg.model, cfg.disc, cfg.quad};
    meanrev::verify_options opts;
    opts.stop_loss = cfg.stop_loss;
    opts.run_mc = !no_mc;
    if (cfg.mc_given) opts.mc = cfg.mc;
    opts.b_star_shift = perturb_b;

    const auto checks = meanrev::run_verification(pr, opts);
    ordered_json arr = ordered_json::array();
    for (const auto& c : checks) {
        ordered_json row;
        row["name"] = c.name;
        row["passed"] = c.passed;
        row["skipped"] = c.skipped;
        row["measure"] = jnum(c.measure);
        row["threshold"] = jnum(c.threshold);
        row["note"] = c.note;
        arr.push_back(row);
        if (c.skipped)
            std::cout << "SKIP " << c.name << (c.note.empty() ? "" : " (" + c.note + ")") << "\n";
        else
            std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << fmt(c.measure)
                      << " vs " << fmt(c.threshold) << ")\n";
    }
    const bool ok = meanrev::all_passed(checks);
    ordered_json j;
    j["all_passed"] = ok;
    j["checks"] = arr;
    fs::create_directories(cfg.output_dir);
    write_json(fs::path(cfg.output_dir) / "verify.json", j);
    std::cout << (ok ? "all checks passed" : "verification FAILED") << "\n";
    return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean-reversion pair trading: calibration, thresholds, simulation"};
    app.require_subcommand(1);

    std::string cal_csv, cal_out = ".";
    double cal_a = 1.0, cal_bmin = 0.001, cal_bmax = 1.0, cal_bstep = 0.001, cal_dt = 1.0 / 252.0;
    auto* cal = app.add_subcommand("calibrate", "fit the spread model over a short-leg cash grid");
    cal->add_option("csv", cal_csv, "pair price CSV (date,price1,price2)")->required();
    cal->add_option("--a-cash", cal_a, "long-leg cash amount")->capture_default_str();
    cal->add_option("--b-min", cal_bmin, "smallest short-leg cash")->capture_default_str();
    cal->add_option("--b-max", cal_bmax, "largest short-leg cash")->capture_default_str();
    cal->add_option("--b-step", cal_bstep, "grid step")->capture_default_str();
    cal->add_option("--dt", cal_dt, "observation spacing in years")->capture_default_str();
    cal->add_option("--out", cal_out, "output directory")->capture_default_str();

    common_flags slv_c;
    auto* slv = app.add_subcommand("solve", "solve entry and exit thresholds");
    add_common(slv, slv_c);

    common_flags swp_c;
    std::optional<double> swp_lmin, swp_lmax;
    std::size_t swp_count = 21;
    auto* swp = app.add_subcommand("sweep-l", "exit threshold as a function of the stop-loss");
    add_common(swp, swp_c);
    swp->add_option("--l-min", swp_lmin, "lowest stop-loss level");
    swp->add_option("--l-max", swp_lmax, "highest stop-loss level");
    swp->add_option("--l-count", swp_count, "number of grid points")->capture_default_str();

    common_flags sim_c;
    std::optional<double> sim_x0;
    std::size_t sim_paths = 5;
    auto* sim = app.add_subcommand("simulate", "sample paths under the solved policy");
    add_common(sim, sim_c);
    sim->add_option("--x0", sim_x0, "starting spread level (default theta)");
    sim->add_option("--paths", sim_paths, "number of paths written to CSV")
        ->capture_default_str();

    common_flags ver_c;
    double ver_perturb = 0.0;
    bool ver_nomc = false;
    auto* ver = app.add_subcommand("verify", "run the invariant and oracle suite");
    add_common(ver, ver_c);
    ver->add_option("--perturb-b", ver_perturb, "fractional perturbation of b* (test hook)")
        ->capture_default_str();
    ver->add_flag("--no-mc", ver_nomc, "skip Monte Carlo checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (cal->parsed())
            return cmd_calibrate(cal_csv, cal_a, cal_bmin, cal_bmax, cal_bstep, cal_dt, cal_out);
        if (slv->parsed()) return cmd_solve(resolve_config(slv_c));
        if (swp->parsed()) return cmd_sweep_l(resolve_config(swp_c), swp_lmin, swp_lmax, swp_count);
        if (sim->parsed()) return cmd_simulate(resolve_config(sim_c), sim_x0, sim_paths);
        if (ver->parsed()) return cmd_verify(resolve_config(ver_c), ver_perturb, ver_nomc);
    } catch (const meanrev::input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const meanrev::solver_error& e) {
        ordered_json diag;
        diag["error"] = "solver_failure";
        diag["message"] = e.what();
        std::cout << diag.dump(2) << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
