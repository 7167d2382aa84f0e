#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "thermoeq/config.hpp"
#include "thermoeq/errors.hpp"
#include "thermoeq/study.hpp"

using namespace thermoeq;

namespace {

/// small, fast ladder used by most cases: three sizes, two seeds
EquivalenceStudyConfig tiny_study(double eps, std::vector<double> xi) {
    EquivalenceStudyConfig sc;
    sc.sizes = {4, 6, 8};
    sc.density = 0.4;
    sc.h0 = 1.5;
    sc.seeds = 2;
    sc.steps = 3000;
    sc.record_every = 10;
    sc.transient_fraction = 0.2;
    sc.base_system.wall_dims = 0;
    sc.base_system.torus_dims = 2;
    sc.base_system.box = {4.0, 4.0};  // replaced per size
    sc.base_system.particle_count = 4;
    sc.forces.pair_epsilon = eps;
    sc.forces.pair_range = 1.0;
    sc.forces.xi = std::move(xi);
    sc.integrator.dt = 1e-3;
    return sc;
}

} // namespace

TEST_CASE("study validation wants a real ladder and repeats") {
    EquivalenceStudyConfig sc = tiny_study(1.0, {0.5, 0.0});
    sc.validate();

    EquivalenceStudyConfig two_sizes = sc;
    two_sizes.sizes = {4, 6};
    CHECK_THROWS_AS(two_sizes.validate(), ValidationError);

    EquivalenceStudyConfig one_seed = sc;
    one_seed.seeds = 1;
    CHECK_THROWS_AS(one_seed.validate(), ValidationError);

    EquivalenceStudyConfig bad_fraction = sc;
    bad_fraction.transient_fraction = 1.0;
    CHECK_THROWS_AS(bad_fraction.validate(), ValidationError);
}

TEST_CASE("ladder geometry fixes the density for every size") {
    const EquivalenceStudyConfig sc = tiny_study(1.0, {0.5, 0.0});
    for (int n : {4, 6, 8, 50}) {
        const SystemSpec sys = sc.system_for(n);
        CHECK(sys.particle_count == n);
        REQUIRE(sys.box.size() == 2);
        CHECK(sys.box[0] == sys.box[1]);
        const double density = n / (sys.box[0] * sys.box[1]);
        CHECK(density == doctest::Approx(0.4).epsilon(1e-12));
    }
}

TEST_CASE("with no interaction the matched state point is the energy target") {
    // V = 0 makes H = K, so the energy-conserving runs pin K to n h0 exactly
    const EquivalenceStudyConfig sc = tiny_study(0.0, {0.5, 0.0});
    const StatePointMatch m = match_state_point(sc, 6, 991ULL);
    CHECK(m.target_total == doctest::Approx(9.0));
    CHECK(m.k0() == doctest::Approx(9.0).epsilon(1e-13));
    CHECK(m.kinetic.sigma < 1e-12);
}

TEST_CASE("matching the same state point with different base seeds agrees") {
    EquivalenceStudyConfig sc = tiny_study(1.0, {0.5, 0.0});
    sc.steps = 6000;
    const StatePointMatch a = match_state_point(sc, 6, 1ULL);
    const StatePointMatch b = match_state_point(sc, 6, 2ULL);
    const double sigma = std::sqrt(a.kinetic.sigma * a.kinetic.sigma +
                                   b.kinetic.sigma * b.kinetic.sigma);
    REQUIRE(sigma > 0.0);
    CHECK(std::abs(a.k0() - b.k0()) < 3.0 * sigma);
    // and identical base seeds reproduce the match bitwise
    const StatePointMatch c = match_state_point(sc, 6, 1ULL);
    CHECK(c.k0() == a.k0());
    CHECK(c.kinetic.sigma == a.kinetic.sigma);
}

TEST_CASE("free ladder: both thermostats carry the same current") {
    // with V = 0 the two friction laws coincide, so Delta J is pure noise
    const EquivalenceStudyConfig sc = tiny_study(0.0, {0.5, 0.0});
    const EquivalenceReport report = run_equivalence_study(sc, 17ULL);
    REQUIRE(report.rows.size() == 3);
    for (const SizeRow& row : report.rows) {
        CHECK(row.match.k0() == doctest::Approx(row.n * 1.5).epsilon(1e-13));
        REQUIRE(row.delta_j_sigma() > 0.0);
        CHECK(std::abs(row.delta_j()) < 3.0 * row.delta_j_sigma());
        CHECK(row.v_per_n_ik.mean == 0.0);
        CHECK(row.v_per_n_ie.mean == 0.0);
    }
}

TEST_CASE("undriven ladder: no current flows in either mode") {
    const EquivalenceStudyConfig sc = tiny_study(1.0, {0.0, 0.0});
    const EquivalenceReport report = run_equivalence_study(sc, 23ULL);
    for (const SizeRow& row : report.rows) {
        // the current observable is identically zero without a drive direction
        CHECK(row.j_ik.mean == 0.0);
        CHECK(row.j_ie.mean == 0.0);
        CHECK(row.delta_j() == 0.0);
        // without a drive the energy-conserving friction vanishes identically
        CHECK(row.alpha_ie.mean == 0.0);
        // interacting runs really happened: V is positive and K trades with it
        CHECK(row.v_per_n_ie.mean > 0.0);
        CHECK(row.match.kinetic.sigma > 0.0);
    }
}

TEST_CASE("rows come back sorted by size whatever the input order") {
    EquivalenceStudyConfig sc = tiny_study(0.0, {0.5, 0.0});
    sc.sizes = {8, 4, 6};
    const EquivalenceReport report = run_equivalence_study(sc, 5ULL);
    REQUIRE(report.rows.size() == 3);
    CHECK(report.rows[0].n == 4);
    CHECK(report.rows[1].n == 6);
    CHECK(report.rows[2].n == 8);
}

TEST_CASE("the study is a function of its base seed") {
    const EquivalenceStudyConfig sc = tiny_study(1.0, {0.5, 0.0});
    const std::string a = equivalence_report_to_json(run_equivalence_study(sc, 41ULL));
    const std::string b = equivalence_report_to_json(run_equivalence_study(sc, 41ULL));
    const std::string c = equivalence_report_to_json(run_equivalence_study(sc, 42ULL));
    CHECK(a == b);
    CHECK(a != c);
}

TEST_CASE("worker count changes scheduling, never results") {
    const EquivalenceStudyConfig sc = tiny_study(1.0, {0.5, 0.0});
    const std::string serial = equivalence_report_to_json(run_equivalence_study(sc, 77ULL, 1));
    const std::string threaded =
        equivalence_report_to_json(run_equivalence_study(sc, 77ULL, 2));
    CHECK(serial == threaded);
}

TEST_CASE("per-size artifacts land on disk as each rung completes") {
    namespace fs = std::filesystem;
    const std::string dir = "tmp_study_out";
    fs::remove_all(dir);
    const EquivalenceStudyConfig sc = tiny_study(0.0, {0.5, 0.0});
    const EquivalenceReport report = run_equivalence_study(sc, 3ULL, 1, dir);
    for (int n : {4, 6, 8}) CHECK(fs::exists(dir + "/size_" + std::to_string(n) + ".json"));
    REQUIRE(fs::exists(dir + "/equivalence_report.json"));

    // the persisted report is exactly the returned one
    std::ifstream in(dir + "/equivalence_report.json", std::ios::binary);
    const std::string on_disk((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
    CHECK(on_disk == equivalence_report_to_json(report));
    fs::remove_all(dir);
}

TEST_CASE("a parsed config drives the study plan") {
    const RunConfig cfg = parse_config_text(
        "[system]\nN = 16\nm = 2.0\n"
        "[forces]\nxi = 0.4 0.0\n"
        "[integrator]\nrecord_every = 5\n"
        "[study]\nsizes = 4, 6, 8\ndensity = 0.35\nh0 = 1.2\nseeds = 3\nsteps = 4000\n"
        "transient_fraction = 0.3\n");
    const EquivalenceStudyConfig sc = study_from_run_config(cfg);
    sc.validate();
    CHECK(sc.sizes == std::vector<int>{4, 6, 8});
    CHECK(sc.density == 0.35);
    CHECK(sc.h0 == 1.2);
    CHECK(sc.seeds == 3);
    CHECK(sc.steps == 4000);
    CHECK(sc.record_every == 5);
    CHECK(sc.transient_fraction == 0.3);
    CHECK(sc.base_system.mass == 2.0);
    CHECK(sc.forces.xi == std::vector<double>{0.4, 0.0});
}
