#pragma once

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <iostream>
#include <optional>

#include "io.hpp"

namespace tetrakit::cli {

using io::json;

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kNegative = 2, kInputError = 3, kInternalError = 4 };

struct JobSpec {
    std::string command;
    std::string input_path;
    std::string output_path;  // empty: stdout
    Tolerances tolerances;
    std::optional<int> order_N;
    bool order_auto = false;
    std::optional<std::uint64_t> seed;
    std::optional<int> grid;
    int mc_samples = 32;
    // generate
    std::string gen_class = "PureEContraction";
    int dim = 3;
    // dataset / validate-special
    int boundary_grid = 0;
    int fourier_modes = 32;
    // fixed timestamp for reproducibility tests; empty means now
    std::string timestamp;
};

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> c{"membership", "classify", "fundops", "lift", "verify",
                                            "dataset", "coincide", "validate-special", "generate"};
    return c;
}

inline std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// TETRAKIT_THREADS: positive integer or unset.
inline std::optional<int> threads_from_env() {
    const char* s = std::getenv("TETRAKIT_THREADS");
    if (!s || !*s) return std::nullopt;
    char* end = nullptr;
    const long v = std::strtol(s, &end, 10);
    if (*end != '\0' || v < 1) throw InputError(std::string("TETRAKIT_THREADS must be a positive integer, got '") + s + "'");
    return static_cast<int>(v);
}

inline json provenance(const JobSpec& job, std::optional<int> threads) {
    json p = {{"tool", "tetrakit"},
              {"version", kVersion},
              {"command", job.command},
              {"input", job.input_path},
              {"seed", job.seed ? json(*job.seed) : json(nullptr)},
              {"tolerances",
               {{"eq_tol", job.tolerances.eq_tol},
                {"psd_tol", job.tolerances.psd_tol},
                {"grid_points", job.tolerances.grid_points},
                {"max_power_iters", job.tolerances.max_power_iters}}},
              {"order", job.order_auto ? json("auto") : job.order_N ? json(*job.order_N) : json(nullptr)},
              {"grid", job.grid ? json(*job.grid) : json(nullptr)},
              {"mc_samples", job.mc_samples},
              {"threads", threads ? json(*threads) : json(nullptr)},
              {"timestamp", job.timestamp.empty() ? utc_now() : job.timestamp}};
    return p;
}

namespace detail {

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

inline std::string kind_of(const json& doc) { return doc["kind"].get<std::string>(); }

inline void expect_kind(const json& doc, std::initializer_list<const char*> kinds, const std::string& cmd) {
    const std::string k = kind_of(doc);
    for (const char* want : kinds)
        if (k == want) return;
    std::string list;
    for (const char* want : kinds) list += (list.empty() ? "" : ", ") + std::string(want);
    throw InputError(cmd + ": input kind '" + k + "' not accepted (expected " + list + ")");
}

inline json verdict_json(const MembershipVerdict& v) {
    json o = {{"in_open", v.in_open},
              {"in_closure", v.in_closure},
              {"in_bE", v.in_bE},
              {"sup_psi_ab", v.sup_psi_ab},
              {"sup_psi_ba", v.sup_psi_ba},
              {"boundary_marginal", v.boundary_marginal},
              {"symmetry_consistent", v.symmetry_consistent}};
    o["witness"] = v.witness ? io::to_json(*v.witness) : json(nullptr);
    return o;
}

inline json pair_json(const FundamentalPair& fp) {
    return {{"carrier", io::to_json(fp.carrier.basis)},
            {"X1", io::to_json(fp.X1)},
            {"X2", io::to_json(fp.X2)},
            {"pencil_nu_max", fp.pencil_nu_max},
            {"is_special", fp.is_special},
            {"rank", fp.rank},
            {"unique", fp.unique},
            {"residuals", io::to_json(fp.residuals)}};
}

inline int require_order(const JobSpec& job, const OperatorTriple& x, OrderChoice& choice) {
    if (job.order_auto) {
        choice = choose_order(x.T, job.tolerances);
        return choice.N;
    }
    if (!job.order_N) throw InputError(job.command + " requires --order N or --order auto");
    if (*job.order_N < 0) throw InputError("--order must be nonnegative");
    return *job.order_N;
}

inline json verification_json(const LiftVerification& v) {
    return {{"ok", v.ok}, {"bound", v.bound}, {"residuals", io::to_json(v.residuals)}};
}

inline int interior_grid(const JobSpec& job) { return job.grid ? *job.grid : 16; }

inline TetrablockDataSet dataset_from(const json& j, const std::string& where, const JobSpec& job) {
    if (j.contains("dataset")) return io::read_dataset(j["dataset"], where + ".dataset", job.tolerances);
    if (j.contains("A")) return extract_data_set(io::read_triple(j, where), interior_grid(job), job.tolerances,
                                                 job.boundary_grid);
    return io::read_dataset(j, where, job.tolerances);
}

inline json coincidence_json(const CoincidenceReport& r) {
    json o = {{"coincide", r.coincide},
              {"undecided", r.undecided},
              {"residuals", io::to_json(r.residuals)},
              {"note", r.note}};
    o["phi"] = r.phi ? io::to_json(*r.phi) : json(nullptr);
    o["phi_star"] = r.phi_star ? io::to_json(*r.phi_star) : json(nullptr);
    o["omega"] = r.omega ? io::to_json(*r.omega) : json(nullptr);
    return o;
}

struct Outcome {
    int code = kOk;
    json doc;
    std::string summary;
};

inline json report(const char* kind = "report") {
    return {{"schema", io::kModelSchema}, {"kind", kind}};
}

inline Outcome do_membership(const JobSpec& job, const json& doc) {
    expect_kind(doc, {"point"}, job.command);
    const Point3 p = io::read_point(io::field(doc, "point", "point"), "point");
    const MembershipVerdict v = in_tetrablock(p, job.tolerances);
    Outcome o;
    o.doc = report();
    o.doc["verdict"] = verdict_json(v);
    o.code = v.in_closure ? kOk : kNegative;
    o.summary = std::string("in_open=") + (v.in_open ? "true" : "false") +
                " in_closure=" + (v.in_closure ? "true" : "false") + " in_bE=" + (v.in_bE ? "true" : "false");
    return o;
}

inline Outcome do_classify(const JobSpec& job, const json& doc) {
    expect_kind(doc, {"triple"}, job.command);
    const OperatorTriple x = io::read_triple(doc, "triple");
    CertifyOptions opt;
    opt.mc_samples = job.mc_samples;
    opt.seed = job.seed.value_or(0);
    const ClassificationReport r = classify(x, job.tolerances, opt);
    Outcome o;
    o.doc = report();
    json v = {{"commuting", r.commuting},
              {"e_unitary", r.e_unitary},
              {"e_isometry", r.e_isometry},
              {"pc_isometry", r.pc_isometry},
              {"pc_unitary", r.pc_unitary},
              {"contraction_certificate", to_string(r.contraction_certificate)},
              {"failed_checks", r.failed_checks}};
    v["semi_strict"] = r.semi_strict ? json(*r.semi_strict) : json("not applicable");
    o.doc["verdict"] = v;
    o.doc["residuals"] = io::to_json(r.residuals);
    if (r.contraction_certificate == ContractionCertificate::PassedNecessary) {
        const DecompositionResult d = canonical_decomposition(x, job.tolerances);
        o.doc["decomposition"] = {{"unitary_dim", d.H_u.dim()},
                                  {"cnu_dim", d.H_cnu.dim()},
                                  {"residuals", io::to_json(d.residuals)}};
    }
    o.code = r.contraction_certificate == ContractionCertificate::CertifiedNot ? kNegative : kOk;
    o.summary = std::string("certificate=") + to_string(r.contraction_certificate) +
                " e_unitary=" + (r.e_unitary ? "true" : "false") + " e_isometry=" + (r.e_isometry ? "true" : "false") +
                " pc_isometry=" + (r.pc_isometry ? "true" : "false");
    return o;
}

inline Outcome do_fundops(const JobSpec& job, const json& doc) {
    expect_kind(doc, {"triple"}, job.command);
    const OperatorTriple x = io::read_triple(doc, "triple");
    const FundamentalPair F = fundamental_pair(x, false, job.tolerances);
    const FundamentalPair G = fundamental_pair(x, true, job.tolerances);
    Outcome o;
    o.doc = report();
    o.doc["F"] = pair_json(F);
    o.doc["G"] = pair_json(G);
    const double nu = std::max(F.pencil_nu_max, G.pencil_nu_max);
    o.doc["verdict"] = {{"pencil_contractive", nu <= 1.0 + 1e-8}};
    o.code = nu <= 1.0 + 1e-8 ? kOk : kNegative;
    o.summary = "defect dims " + std::to_string(F.dim()) + "/" + std::to_string(G.dim()) +
                " pencil_nu_max F=" + sci(F.pencil_nu_max) + " G=" + sci(G.pencil_nu_max);
    return o;
}

inline Outcome do_lift(const JobSpec& job, const json& doc, bool with_model) {
    expect_kind(doc, {"triple"}, job.command);
    const OperatorTriple x = io::read_triple(doc, "triple");
    OrderChoice choice;
    const int N = require_order(job, x, choice);
    DouglasModel m = build_lift(x, N, job.tolerances);
    if (choice.capped) {
        if (!m.warning.empty()) m.warning += "; ";
        m.warning += "truncation order capped at " + std::to_string(kMaxOrder);
    }
    const LiftVerification v = verify_lift(m, x, job.tolerances);
    const LiftStrictness s = lift_is_strict(m, job.tolerances);
    Outcome o;
    o.doc = report(with_model ? "douglas_model" : "report");
    if (with_model) {
        o.doc["source"] = io::to_json(x);
        o.doc["model"] = io::to_json(m);
    } else {
        o.doc["order_N"] = m.order_N;
        o.doc["tail"] = m.tail;
        o.doc["warning"] = m.warning;
        const HalvingCheck h = halving_check(x, N, job.tolerances);
        o.doc["halving"] = {{"N_half", h.N_half}, {"res_half", h.res_half}, {"res_full", h.res_full},
                            {"passed", h.passed}};
    }
    o.doc["verification"] = verification_json(v);
    o.doc["strictness"] = {{"strict", s.strict},
                           {"symbols_commute", s.symbols_commute},
                           {"special_pair", s.special_pair},
                           {"residual_strict", s.residual_strict},
                           {"lift_commutator", s.lift_commutator},
                           {"consistent", s.consistent}};
    o.code = v.ok ? kOk : kNegative;
    o.summary = "order N=" + std::to_string(N) + " tail=" + sci(m.tail) +
                " max intertwining residual=" + sci(max_intertwining(v)) + (v.ok ? " ok" : " FAILED");
    if (!m.warning.empty()) o.summary += "\nwarning: " + m.warning;
    return o;
}

inline Outcome do_dataset(const JobSpec& job, const json& doc) {
    expect_kind(doc, {"triple"}, job.command);
    const OperatorTriple x = io::read_triple(doc, "triple");
    const TetrablockDataSet d = extract_data_set(x, interior_grid(job), job.tolerances, job.boundary_grid);
    Outcome o;
    o.doc = io::dataset_document(d);
    o.summary = "dataset: dim_in=" + std::to_string(d.dim_in) + " dim_out=" + std::to_string(d.dim_out) +
                " residual dim=" + std::to_string(d.residual.dim()) + " samples=" +
                std::to_string(d.theta_samples.size());
    return o;
}

inline Outcome do_coincide(const JobSpec& job, const json& doc) {
    expect_kind(doc, {"dataset_pair", "triple_pair"}, job.command);
    const TetrablockDataSet d1 = dataset_from(io::field(doc, "first", "pair"), "first", job);
    const TetrablockDataSet d2 = dataset_from(io::field(doc, "second", "pair"), "second", job);
    const CoincidenceReport r = coincide(d1, d2, job.tolerances);
    Outcome o;
    o.doc = report();
    o.doc["verdict"] = coincidence_json(r);
    o.code = r.coincide ? kOk : kNegative;
    o.summary = std::string("coincide=") + (r.coincide ? "true" : "false") + (r.undecided ? " (undecided)" : "");
    return o;
}

inline Outcome do_validate_special(const JobSpec& job, const json& doc) {
    expect_kind(doc, {"dataset"}, job.command);
    const TetrablockDataSet d = dataset_from(doc, "input", job);
    const SpecialReport r = validate_special_data_set(d, job.fourier_modes, job.tolerances);
    Outcome o;
    o.doc = report();
    o.doc["verdict"] = {{"condition_i", r.condition_i},
                        {"condition_ii", r.condition_ii},
                        {"passed", r.passed()},
                        {"pencil_sup", r.pencil_sup},
                        {"invariance_residual", r.invariance_residual}};
    o.doc["residuals"] = io::to_json(r.residuals);
    o.code = r.passed() ? kOk : kNegative;
    o.summary = std::string("condition (i) ") + (r.condition_i ? "holds" : "fails") + ", condition (ii) " +
                (r.condition_ii ? "holds" : "fails");
    return o;
}

inline Outcome do_generate(const JobSpec& job) {
    GenConfig cfg;
    cfg.seed = job.seed.value_or(0);
    cfg.dim = job.dim;
    cfg.class_tag = gen_class_from_string(job.gen_class);
    Outcome o;
    if (cfg.class_tag == GenClass::SpecialScalarDataSet) {
        o.doc = io::dataset_document(gen_scalar_special_dataset(cfg));
    } else {
        o.doc = io::triple_document(gen_triple(cfg));
    }
    o.summary = "generated " + job.gen_class + " dim=" + std::to_string(job.dim) + " seed=" +
                std::to_string(cfg.seed);
    return o;
}

inline json error_json(const char* type, const std::string& msg) {
    return {{"type", type}, {"message", msg}};
}

}  // namespace detail

/// Runs one job. The report goes to job.output_path (stdout when empty); the
/// one-line summary and any error message go to `log`.
inline int run(const JobSpec& job, std::ostream& log = std::cerr) {
    using namespace detail;
    Outcome o;
    std::optional<int> threads;
    try {
        threads = threads_from_env();
        job.tolerances.validate();
        if (std::find(commands().begin(), commands().end(), job.command) == commands().end())
            throw InputError("unknown command '" + job.command + "'");
        if (job.command == "generate") {
            o = do_generate(job);
        } else {
            const json doc = io::load_document(job.input_path);
            if (job.command == "membership") o = do_membership(job, doc);
            else if (job.command == "classify") o = do_classify(job, doc);
            else if (job.command == "fundops") o = do_fundops(job, doc);
            else if (job.command == "lift") o = do_lift(job, doc, true);
            else if (job.command == "verify") o = do_lift(job, doc, false);
            else if (job.command == "dataset") o = do_dataset(job, doc);
            else if (job.command == "coincide") o = do_coincide(job, doc);
            else o = do_validate_special(job, doc);
        }
    } catch (const NotEContractionEvidence& e) {
        o.code = kNegative;
        o.doc = report();
        o.doc["error"] = error_json("NotEContractionEvidence", e.what());
        o.doc["residuals"] = io::to_json(e.residuals());
    } catch (const NotContractionError& e) {
        o.code = kNegative;
        o.doc = report();
        o.doc["error"] = error_json("NotContractionError", e.what());
    } catch (const NotCommutingError& e) {
        o.code = kNegative;
        o.doc = report();
        o.doc["error"] = error_json("NotCommutingError", e.what());
    } catch (const InconsistentInputError& e) {
        o.code = kNegative;
        o.doc = report();
        o.doc["error"] = error_json("InconsistentInputError", e.what());
    } catch (const InputError& e) {
        o.code = kInputError;
        o.doc = report();
        o.doc["error"] = error_json("InputError", e.what());
    } catch (const DimensionError& e) {
        o.code = kInputError;
        o.doc = report();
        o.doc["error"] = error_json("DimensionError", e.what());
    } catch (const PreconditionError& e) {
        o.code = kInputError;
        o.doc = report();
        o.doc["error"] = error_json("PreconditionError", e.what());
    } catch (const std::exception& e) {
        o.code = kInternalError;
        o.doc = report();
        o.doc["error"] = error_json("InternalError", e.what());
    }
    if (o.doc.contains("error")) log << "error: " << o.doc["error"]["message"].get<std::string>() << "\n";
    else log << o.summary << "\n";
    o.doc["exit_code"] = o.code;
    try {
        o.doc["provenance"] = provenance(job, threads);
    } catch (const std::exception&) {
    }
    try {
        if (job.output_path.empty()) std::cout << o.doc.dump(2) << "\n";
        else io::write_file(job.output_path, o.doc);
    } catch (const InputError& e) {
        log << "error: " << e.what() << "\n";
        return kInputError;
    }
    return o.code;
}

}  // namespace tetrakit::cli
