#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "gridse/cases.hpp"
#include "gridse/grid.hpp"
#include "gridse/matpower.hpp"
#include "gridse/measurement.hpp"

using namespace gridse;
using Catch::Matchers::WithinAbs;

TEST_CASE("bundled IEEE-9 parses to the expected shape") {
    const GridCase grid = cases::load_bundled("ieee9");
    CHECK(grid.n_buses() == 9);
    CHECK(grid.n_branches() == 9);
    CHECK(grid.buses[grid.slack].type == BusType::slack);
    int n_slack = 0;
    for (const auto& b : grid.buses)
        if (b.type == BusType::slack) ++n_slack;
    CHECK(n_slack == 1);
    CHECK(grid.base_mva == 100.0);
    // loads land in per-unit
    CHECK_THAT(grid.buses[4].Pd, WithinAbs(0.90, 1e-12));
    CHECK_THAT(grid.buses[8].Qd, WithinAbs(0.50, 1e-12));
}

TEST_CASE("parse errors are distinct") {
    const std::string two_slack = R"(
mpc.baseMVA = 100;
mpc.bus = [ 1 3 0 0 0 0 1 1 0 345; 2 3 0 0 0 0 1 1 0 345; ];
mpc.branch = [ 1 2 0 0.1 0 0 0 0 0 0 1; ];
)";
    CHECK_THROWS_MATCHES(parse_case(two_slack), ParseError,
                         Catch::Matchers::Predicate<ParseError>([](const ParseError& e) {
                             return e.kind() == ParseErrorKind::multiple_slack_buses;
                         }));
    CHECK_THROWS_MATCHES(parse_case(""), ParseError,
                         Catch::Matchers::Predicate<ParseError>([](const ParseError& e) {
                             return e.kind() == ParseErrorKind::missing_bus_table;
                         }));
    const std::string dup = R"(
mpc.baseMVA = 100;
mpc.bus = [ 1 3 0 0 0 0 1 1 0 345; 1 1 0 0 0 0 1 1 0 345; ];
mpc.branch = [ 1 1 0 0.1 0 0 0 0 0 0 1; ];
)";
    CHECK_THROWS_MATCHES(parse_case(dup), ParseError,
                         Catch::Matchers::Predicate<ParseError>([](const ParseError& e) {
                             return e.kind() == ParseErrorKind::duplicate_bus_id;
                         }));
    const std::string bad_ref = R"(
mpc.baseMVA = 100;
mpc.bus = [ 1 3 0 0 0 0 1 1 0 345; 2 1 0 0 0 0 1 1 0 345; ];
mpc.branch = [ 1 7 0 0.1 0 0 0 0 0 0 1; ];
)";
    CHECK_THROWS_MATCHES(parse_case(bad_ref), ParseError,
                         Catch::Matchers::Predicate<ParseError>([](const ParseError& e) {
                             return e.kind() == ParseErrorKind::unknown_bus_reference;
                         }));
    const std::string no_slack = R"(
mpc.baseMVA = 100;
mpc.bus = [ 1 1 0 0 0 0 1 1 0 345; 2 1 0 0 0 0 1 1 0 345; ];
mpc.branch = [ 1 2 0 0.1 0 0 0 0 0 0 1; ];
)";
    CHECK_THROWS_MATCHES(parse_case(no_slack), ParseError,
                         Catch::Matchers::Predicate<ParseError>([](const ParseError& e) {
                             return e.kind() == ParseErrorKind::missing_slack_bus;
                         }));
    const std::string malformed = R"(
mpc.baseMVA = 100;
mpc.bus = [ 1 3 0 zz 0 0 1 1 0 345; ];
mpc.branch = [ 1 1 0 0.1 0 0 0 0 0 0 1; ];
)";
    CHECK_THROWS_MATCHES(parse_case(malformed), ParseError,
                         Catch::Matchers::Predicate<ParseError>([](const ParseError& e) {
                             return e.kind() == ParseErrorKind::malformed_table;
                         }));
}

TEST_CASE("out-of-service branches are dropped") {
    const std::string text = R"(
mpc.baseMVA = 100;
mpc.bus = [ 1 3 0 0 0 0 1 1 0 345; 2 1 10 1 0 0 1 1 0 345; ];
mpc.branch = [
 1 2 0 0.1 0 0 0 0 0 0 1;
 1 2 0 0.2 0 0 0 0 0 0 0;
];
)";
    CHECK(parse_case(text).n_branches() == 1);
}

TEST_CASE("derive_branch_params matches the per-side formulas") {
    SECTION("nominal ratio and no charging leaves no shunts") {
        // g_s + j b_s = 2 - 5j corresponds to 1/(r + jx) with the values below
        const Complex z = 1.0 / Complex(2.0, -5.0);
        BranchRecord br{0, 1, z.real(), z.imag(), 0.0, 1.0, true};
        const auto p = derive_branch_params(br);
        CHECK_THAT(p.g, WithinAbs(2.0, 1e-12));
        CHECK_THAT(p.b, WithinAbs(-5.0, 1e-12));
        CHECK_THAT(p.g_sh_from, WithinAbs(0.0, 1e-12));
        CHECK_THAT(p.b_sh_from, WithinAbs(0.0, 1e-12));
        CHECK_THAT(p.g_hat_from() - p.g, WithinAbs(0.0, 1e-15));
        CHECK_THAT(p.b_hat_from() - p.b, WithinAbs(0.0, 1e-15));
    }
    SECTION("off-nominal ratio") {
        const Complex z = 1.0 / Complex(1.0, -2.0);
        BranchRecord br{0, 1, z.real(), z.imag(), 0.1, 2.0, true};
        const auto p = derive_branch_params(br);
        CHECK_THAT(p.g, WithinAbs(0.5, 1e-12));
        CHECK_THAT(p.b, WithinAbs(-1.0, 1e-12));
        CHECK_THAT(p.g_sh_from, WithinAbs(-0.25, 1e-12));
        CHECK_THAT(p.b_sh_from, WithinAbs(0.55, 1e-12));
    }
    SECTION("line charging only") {
        const Complex z = 1.0 / Complex(0.0, -4.0);
        BranchRecord br{0, 1, z.real(), z.imag(), 0.2, 1.0, true};
        const auto p = derive_branch_params(br);
        CHECK_THAT(p.b_sh_from, WithinAbs(0.1, 1e-12));
        CHECK_THAT(p.b_hat_from(), WithinAbs(-3.9, 1e-12));
    }
    SECTION("invalid ratio") {
        BranchRecord br{0, 1, 0.1, 0.2, 0.0, 0.0, true};
        CHECK_THROWS_AS(derive_branch_params(br), std::domain_error);
    }
}

TEST_CASE("two-bus admittance assembly") {
    GridCase grid;
    grid.base_mva = 100.0;
    grid.buses = {{1, BusType::slack, 0, 0, 0, 0, 115.0}, {2, BusType::pq, 0, 0, 0, 0, 115.0}};
    grid.branches = {{0, 1, 0.0, 0.1, 0.0, 1.0, true}};
    grid.gens = {{0, 0, 0, 1.0, true}};
    grid.slack = 0;
    const auto model = build_admittance(grid);
    CHECK_THAT(model.Y.coeff(0, 0).imag(), WithinAbs(-10.0, 1e-12));
    CHECK_THAT(model.Y.coeff(0, 1).imag(), WithinAbs(10.0, 1e-12));
    CHECK_THAT(model.Y.coeff(1, 0).imag(), WithinAbs(10.0, 1e-12));
    CHECK_THAT(model.Y.coeff(1, 1).imag(), WithinAbs(-10.0, 1e-12));
    CHECK_THAT(model.Y.coeff(0, 0).real(), WithinAbs(0.0, 1e-12));
}

TEST_CASE("isolated bus has an empty Y row and neighbor set") {
    GridCase grid;
    grid.base_mva = 100.0;
    grid.buses = {{1, BusType::slack, 0, 0, 0, 0, 115.0},
                  {2, BusType::pq, 0, 0, 0, 0, 115.0},
                  {3, BusType::pq, 0, 0, 0, 0, 115.0}};
    grid.branches = {{0, 1, 0.01, 0.1, 0.0, 1.0, true}};
    grid.gens = {{0, 0, 0, 1.0, true}};
    grid.slack = 0;
    const auto model = build_admittance(grid);
    CHECK(model.neighbors[2].empty());
    for (int j = 0; j < 3; ++j) CHECK(model.Y.coeff(2, j) == Complex(0, 0));
}

TEST_CASE("IEEE-9 admittance sparsity") {
    const auto model = build_admittance(cases::load_bundled("ieee9"));
    CHECK(model.Y.nonZeros() == 27);  // 9 diagonal + 2 per branch
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 9; ++j) {
            const bool connected =
                std::find(model.neighbors[i].begin(), model.neighbors[i].end(), j) !=
                model.neighbors[i].end();
            const bool stored = model.Y.coeff(i, j) != Complex(0, 0);
            CHECK(stored == (i == j || connected));
        }
}

TEST_CASE("injection equations agree with the complex nodal form") {
    // two formulations of the same physics must coincide at any state
    for (const char* id : {"ieee9", "ieee14", "ieee33"}) {
        const auto model = build_admittance(cases::load_bundled(id));
        const int n = model.n_buses();
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> uV(0.95, 1.05), uT(-0.3, 0.3);
        StateVector st;
        st.V.resize(n);
        st.theta.resize(n);
        for (int i = 0; i < n; ++i) {
            st.V[i] = uV(rng);
            st.theta[i] = uT(rng);
        }
        std::vector<MeasurementMeta> metas;
        for (int i = 0; i < n; ++i) metas.push_back({MeasKind::pinj, i, -1, -1, 1.0, false});
        for (int i = 0; i < n; ++i) metas.push_back({MeasKind::qinj, i, -1, -1, 1.0, false});
        const VectorXd h = eval_measurements(model, st, metas);
        const Eigen::VectorXcd S = bus_injections(model, st);
        for (int i = 0; i < n; ++i) {
            CHECK_THAT(h[i], WithinAbs(S[i].real(), 1e-10));
            CHECK_THAT(h[n + i], WithinAbs(S[i].imag(), 1e-10));
        }
    }
}

TEST_CASE("branch flows at both ends balance the series losses") {
    const auto model = build_admittance(cases::load_bundled("ieee14"));
    const int n = model.n_buses();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uV(0.97, 1.03), uT(-0.2, 0.2);
    StateVector st;
    st.V.resize(n);
    st.theta.resize(n);
    for (int i = 0; i < n; ++i) {
        st.V[i] = uV(rng);
        st.theta[i] = uT(rng);
    }
    // sum of injections equals sum of from+to flows for every quantity when
    // flows are metered at both ends of every branch
    std::vector<MeasurementMeta> inj, flows;
    for (int i = 0; i < n; ++i) inj.push_back({MeasKind::pinj, i, -1, -1, 1.0, false});
    for (int b = 0; b < model.grid.n_branches(); ++b) {
        const auto& br = model.grid.branches[b];
        flows.push_back({MeasKind::pflow, br.from, br.to, b, 1.0, false});
        flows.push_back({MeasKind::pflow, br.to, br.from, b, 1.0, false});
    }
    // bus shunts do not exist on ieee14 buses except b9 which has only Bs
    const double sum_inj = eval_measurements(model, st, inj).sum();
    const double sum_flow = eval_measurements(model, st, flows).sum();
    // P: shunt conductances are zero on this case, so the sums match
    CHECK_THAT(sum_inj, WithinAbs(sum_flow, 1e-9));
}

TEST_CASE("renumbering and renumbering back is exact") {
    const GridCase grid = cases::load_bundled("ieee14");
    std::vector<int> perm(grid.n_buses());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(5);
    std::shuffle(perm.begin(), perm.end(), rng);
    const GridCase back = renumber_buses(renumber_buses(grid, perm), inverse_permutation(perm));
    REQUIRE(back.n_buses() == grid.n_buses());
    for (int i = 0; i < grid.n_buses(); ++i) {
        CHECK(back.buses[i].id == grid.buses[i].id);
        CHECK(back.buses[i].Pd == grid.buses[i].Pd);  // bit-identical
        CHECK(back.buses[i].Bs == grid.buses[i].Bs);
    }
    for (int b = 0; b < grid.n_branches(); ++b) {
        CHECK(back.branches[b].from == grid.branches[b].from);
        CHECK(back.branches[b].to == grid.branches[b].to);
        CHECK(back.branches[b].x == grid.branches[b].x);
    }
    CHECK(back.slack == grid.slack);
}
