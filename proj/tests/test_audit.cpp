#include <doctest.h>

#include "mhrn/audit.hpp"
#include "mhrn/error.hpp"
#include "mhrn/evolution.hpp"

#include <json.hpp>

#include <cmath>
#include <string>
#include <vector>

using namespace mhrn;

namespace {

// history scaffold with report times 0..n-1 and everything else zeroed
RunHistory scaffold(int n) {
    RunHistory h;
    h.reports.resize(n);
    for (int k = 0; k < n; ++k) h.reports[k].time = static_cast<double>(k);
    return h;
}

} // namespace

TEST_CASE("energy conservation audit: drift measurement and fault detection") {
    RunHistory h = scaffold(11);
    for (int k = 0; k < 11; ++k) h.reports[k].E = 2.5 * (1.0 + (k % 2 ? 4e-7 : -4e-7));
    h.reports[0].E = 2.5;
    AuditReport r = check_energy_conservation(h);
    CHECK(r.id == "energy_conservation");
    CHECK(r.pass);
    CHECK(r.constants.at("drift") == doctest::Approx(8e-7).epsilon(1e-3));
    CHECK(r.worst_ratio < 1.0);
    CHECK(r.samples == 11);

    // a ten-percent jump must trip the audit
    h.reports[7].E = 2.75;
    r = check_energy_conservation(h);
    CHECK(!r.pass);
    CHECK(r.constants.at("drift") == doctest::Approx(0.1).epsilon(1e-6));

    // zero initial energy switches to the absolute reading
    RunHistory hz = scaffold(5);
    hz.reports[3].E = 5e-7;
    CHECK(check_energy_conservation(hz).pass);
    CHECK(!check_energy_conservation(hz, 1e-7).pass);
}

TEST_CASE("hardy audit: constant is stable across the sample family") {
    const AuditReport r1 = check_hardy(1.0);
    CHECK(r1.id == "hardy");
    CHECK(r1.pass);
    CHECK(r1.constants.at("C") > 0.0);
    CHECK(r1.constants.at("C") < 100.0);
    CHECK(r1.worst_ratio <= 1.0);
    CHECK(r1.samples == 100);

    const AuditReport r2 = check_hardy(2.0);
    CHECK(r2.pass);

    // deterministic: the fitted constant reproduces bit for bit
    const AuditReport r3 = check_hardy(1.0);
    CHECK(r3.constants.at("C") == r1.constants.at("C"));
    CHECK(r3.worst_ratio == r1.worst_ratio);
}

TEST_CASE("holder audit: single modes are equalities, mixtures obey the bound") {
    const AuditReport r = check_holder_interpolation();
    CHECK(r.id == "holder_interpolation");
    CHECK(r.pass);
    CHECK(r.constants.at("max_single_defect") <= 1e-10);
    CHECK(r.constants.at("worst_two_mode") <= 1.0 + 1e-8);
    CHECK(r.constants.at("worst_two_mode") > 0.5); // the bound is actually exercised
    CHECK(r.samples == 62);
}

TEST_CASE("gronwall audit: accepts conformal-rate growth, catches early jumps") {
    RunHistory h = scaffold(21);
    for (int k = 0; k < 21; ++k) h.reports[k].E_C = 0.8 * (1.0 + k) * (1.0 + k);
    AuditReport r = check_gronwall_envelope(h);
    CHECK(r.id == "gronwall_envelope");
    CHECK(r.pass);
    CHECK(r.constants.at("C_bar") > 0.0);
    CHECK(r.worst_ratio <= 1.0);

    // thousandfold jump in the first interval escapes any fitted envelope
    RunHistory hj = scaffold(21);
    for (int k = 0; k < 21; ++k) hj.reports[k].E_C = (k == 0) ? 1.0 : 1000.0;
    CHECK(!check_gronwall_envelope(hj).pass);

    RunHistory hz = scaffold(6);
    CHECK(check_gronwall_envelope(hz).pass); // identically zero history is quiet

    RunHistory one = scaffold(1);
    one.reports[0].E_C = 7.0;
    CHECK(check_gronwall_envelope(one).pass); // single report is vacuous
}

TEST_CASE("conformal growth audit: tail slope against the squared-time law") {
    auto history_with_power = [&](double p) {
        RunHistory h = scaffold(20);
        h.initial_energy = 1.0;
        h.initial_conformal = 2.0;
        h.initial_bilaplacian = 3.0;
        for (int k = 0; k < 20; ++k) h.reports[k].E_C = 2.0 * std::pow(1.0 + k, p);
        return h;
    };
    AuditReport ok = check_conformal_growth(history_with_power(1.8));
    CHECK(ok.id == "conformal_growth");
    CHECK(ok.pass);
    CHECK(ok.constants.at("slope") == doctest::Approx(1.8).epsilon(1e-6));
    CHECK(ok.constants.at("R_max") > 0.0);

    AuditReport bad = check_conformal_growth(history_with_power(2.6));
    CHECK(!bad.pass);
    CHECK(bad.constants.at("slope") > 2.2);

    // too few tail points is flagged, not silently passed
    RunHistory shorty = scaffold(4);
    for (int k = 0; k < 4; ++k) shorty.reports[k].E_C = 1.0 + k;
    AuditReport inc = check_conformal_growth(shorty);
    CHECK(!inc.pass);
    CHECK(inc.constants.count("inconclusive") == 1);

    RunHistory quiet = scaffold(12);
    CHECK(check_conformal_growth(quiet).pass);
}

TEST_CASE("linf growth audit: local slices against linear-in-time growth") {
    RunHistory h = scaffold(20);
    for (int k = 0; k < 20; ++k) {
        h.reports[k].linf_phi_loc = 0.3 * (1.0 + k);
        h.reports[k].l2_phi_loc = 0.1 * (1.0 + k);
    }
    AuditReport r = check_linf_growth(h);
    CHECK(r.id == "linf_growth");
    CHECK(r.pass);
    CHECK(r.worst_ratio == doctest::Approx(1.0 / 1.5).epsilon(1e-9));

    RunHistory hg = scaffold(20);
    for (int k = 0; k < 20; ++k) {
        const double t = 1.0 + k;
        hg.reports[k].linf_phi_loc = (k < 10) ? 0.3 * t : 0.3 * t * t;
        hg.reports[k].l2_phi_loc = 0.1 * t;
    }
    CHECK(!check_linf_growth(hg).pass);

    RunHistory hz = scaffold(8);
    CHECK(check_linf_growth(hz).pass); // zero columns stay inside the absolute floor
}

TEST_CASE("el vs ec audit: late-time local energy against the conformal quotient") {
    RunHistory h = scaffold(20);
    h.initial_energy = 1.0;
    for (int k = 0; k < 20; ++k) {
        const double t = h.reports[k].time;
        h.reports[k].E_C = (1.0 + t) * (1.0 + t);
        if (t >= 1.0) h.reports[k].E_l = 0.3 * (h.reports[k].E_C / (t * t) + 1.0);
    }
    AuditReport r = check_el_vs_ec(h);
    CHECK(r.id == "el_vs_ec");
    CHECK(r.pass);
    CHECK(r.constants.at("C_fit") == doctest::Approx(0.3).epsilon(1e-9));

    RunHistory hb = scaffold(20);
    hb.initial_energy = 1.0;
    for (int k = 0; k < 20; ++k) {
        const double t = hb.reports[k].time;
        hb.reports[k].E_C = (1.0 + t) * (1.0 + t);
        if (t >= 1.0) {
            const double base = 0.3 * (hb.reports[k].E_C / (t * t) + 1.0);
            hb.reports[k].E_l = (t >= 12.0) ? 3.0 * base : base;
        }
    }
    CHECK(!check_el_vs_ec(hb).pass);

    RunHistory tiny = scaffold(3); // no usable t >= 1 window
    tiny.initial_energy = 1.0;
    AuditReport inc = check_el_vs_ec(tiny);
    CHECK(!inc.pass);
    CHECK(inc.constants.count("inconclusive") == 1);
}

TEST_CASE("convergence study: fourth-order richardson exponent on a real run") {
    RunConfig c;
    c.rstar_min = -50.0;
    c.rstar_max = 50.0;
    c.n_points = 401;
    c.ell = 2;
    c.center = 0.0;
    c.width = 6.0;
    c.direction = "symmetric";
    c.cfl = 0.2;
    c.t_final = 2.0;
    c.report_cadence = 1.0;
    c.snapshot_cadence = 0.25;

    const AuditReport r = convergence_study(c);
    CHECK(r.id == "convergence_study");
    CHECK(r.pass);
    CHECK(r.constants.at("p") == doctest::Approx(4.0).epsilon(0.15));

    c.t_final = 0.0; // no evolution: identical states, no order to measure
    const AuditReport inc = convergence_study(c);
    CHECK(!inc.pass);
    CHECK(inc.constants.count("inconclusive") == 1);
}

TEST_CASE("audit battery and json schema") {
    RunConfig c;
    c.rstar_min = -60.0;
    c.rstar_max = 60.0;
    c.n_points = 601;
    c.ell = 2;
    c.center = 10.0;
    c.width = 6.0;
    c.direction = "symmetric";
    c.cfl = 0.25;
    c.t_final = 8.0;
    c.report_cadence = 1.0;
    c.snapshot_cadence = 0.5;

    const RunHistory h = evolve_mode(c);
    const std::vector<AuditReport> reports = run_standard_audits(h);
    REQUIRE(reports.size() == 7);
    const std::vector<std::string> ids = {"energy_conservation", "hardy",
                                          "holder_interpolation", "gronwall_envelope",
                                          "conformal_growth",     "linf_growth",
                                          "el_vs_ec"};
    for (size_t i = 0; i < ids.size(); ++i) CHECK(reports[i].id == ids[i]);

    const std::string text = audit_reports_to_json(reports);
    const nlohmann::json parsed = nlohmann::json::parse(text);
    REQUIRE(parsed.is_array());
    REQUIRE(parsed.size() == 7);
    for (const auto& item : parsed) {
        CHECK(item.contains("id"));
        CHECK(item.contains("pass"));
        CHECK(item.contains("constants"));
        CHECK(item.contains("worst_ratio"));
        CHECK(item.contains("samples"));
        CHECK(item.contains("tolerance"));
        CHECK(item["pass"].is_boolean());
        CHECK(item["constants"].is_object());
    }
    CHECK(parsed[0]["id"] == "energy_conservation");
    CHECK(parsed[0]["constants"]["drift"].get<double>() >= 0.0);
    // full round trip of the numeric payload
    CHECK(parsed[1]["constants"]["C"].get<double>() ==
          reports[1].constants.at("C"));
}
