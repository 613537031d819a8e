#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "loopwell/io.hpp"

using namespace loopwell;
namespace fs = std::filesystem;
using io::json;

namespace {

fs::path scratch_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("loopwell_io_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Config, UnknownAndMissingKeys) {
  const auto j = json::parse(R"({"a": 1, "b": 2})");
  EXPECT_NO_THROW(io::reject_unknown_keys(j, {"a", "b", "c"}, "cfg"));
  EXPECT_THROW(io::reject_unknown_keys(j, {"a"}, "cfg"), ConfigError);
  EXPECT_THROW(io::require_key(j, "c", "cfg"), ConfigError);
  EXPECT_THROW(io::reject_unknown_keys(json::array(), {"a"}, "cfg"), ConfigError);
}

TEST(Config, TypedGetters) {
  const auto j = json::parse(R"({"x": 1.5, "n": 3, "f": 2.5, "s": "hi", "b": true, "arr": [1, 2.5]})");
  EXPECT_EQ(io::get_number(j, "x", "cfg"), 1.5);
  EXPECT_EQ(io::get_number(j, "missing", 7.0, "cfg"), 7.0);
  EXPECT_EQ(io::get_integer(j, "n", "cfg"), 3);
  EXPECT_THROW(io::get_integer(j, "f", "cfg"), ConfigError);
  EXPECT_THROW(io::get_number(j, "s", "cfg"), ConfigError);
  EXPECT_EQ(io::get_string(j, "s", "cfg"), "hi");
  EXPECT_TRUE(io::get_bool(j, "b", false, "cfg"));
  EXPECT_EQ(io::number_array(j.at("arr"), "cfg"), (std::vector<double>{1.0, 2.5}));
  EXPECT_THROW(io::number_array(j.at("x"), "cfg"), ConfigError);
}

TEST(Config, MalformedFileIsAConfigError) {
  const auto d = scratch_dir("malformed");
  std::ofstream(d / "bad.json") << "{\"a\": ";
  EXPECT_THROW(io::parse_file(d / "bad.json"), ConfigError);
  EXPECT_THROW(io::parse_file(d / "absent.json"), ConfigError);
}

TEST(Potential, TrigRoundTrip) {
  const auto j = json::parse(R"({"mean": 0.3, "cos": [1.0, 0.0, 0.25], "sin": [0.5]})");
  const auto v = io::potential_from_json(j, "v");
  for (double t : {0.0, 0.7, 2.1, 4.4})
    EXPECT_NEAR(v(t), 0.3 + std::cos(t) + 0.25 * std::cos(3 * t) + 0.5 * std::sin(t), 1e-15);
  const auto back = io::potential_from_json(io::potential_to_json(v), "v");
  for (int l = -3; l <= 3; ++l) EXPECT_EQ(back[l], v[l]);
  EXPECT_EQ(io::potential_from_json(json(2.0), "v").mean(), 2.0);
  EXPECT_THROW(io::potential_from_json(json::parse(R"({"tan": [1]})"), "v"), ConfigError);
}

TEST(Model, ParsesAndValidates) {
  const auto m = io::model_from_json(
      json::parse(R"({"b0": 0.1, "I0": 0.37, "g": [0, 1, 0.3], "g1": [0.2], "v0": {"cos": [1]}})"));
  EXPECT_EQ(m.b0, 0.1);
  EXPECT_EQ(m.I0, 0.37);
  EXPECT_EQ(m.g[2], 0.3);
  EXPECT_EQ(m.g1[0], 0.2);
  EXPECT_NEAR(m.v0[1].real(), 0.5, 1e-16);
  EXPECT_THROW(io::model_from_json(json::parse(R"({"I0": 0, "g": [0.1, 1]})")), ConfigError);
  EXPECT_THROW(io::model_from_json(json::parse(R"({"I0": 0, "g": [0, 0]})")), ConfigError);
  EXPECT_THROW(io::model_from_json(json::parse(R"({"g": [0, 1]})")), ConfigError);
  EXPECT_THROW(io::model_from_json(json::parse(R"({"I0": 0, "g": [0, 1], "extra": 1})")), ConfigError);
}

TEST(Series, RoundTripIsExact) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  FourierTaylorSeries s(0.25, 3, 4);
  for (int k = 0; k <= 3; ++k)
    for (int j = 0; j <= 4; ++j) {
      const cplx c = k == 0 ? cplx(u(rng), 0.0) : cplx(u(rng), u(rng));
      s.at(k, j) = c;
      s.at(-k, j) = std::conj(c);
    }
  s.set_valid_order(3);
  const auto back = io::series_from_json(json::parse(io::series_to_json(s).dump()));
  EXPECT_EQ(back.base_point(), 0.25);
  EXPECT_EQ(back.fourier_cut(), 3);
  EXPECT_EQ(back.taylor_cut(), 4);
  EXPECT_EQ(back.valid_order(), 3);
  for (int k = -3; k <= 3; ++k)
    for (int j = 0; j <= 4; ++j) EXPECT_EQ(back(k, j), s(k, j));
}

TEST(Series, RejectsBadInput) {
  EXPECT_THROW(io::series_from_json(json::parse(R"({"base_point": 0, "K": 1, "J": 1, "coeffs": [[2, 0, 1, 0]]})")),
               ConfigError);
  EXPECT_THROW(io::series_from_json(json::parse(R"({"base_point": 0, "K": 1, "J": 1, "coeffs": [[1, 0, 1, 0]]})")),
               ConfigError);
  EXPECT_THROW(io::series_from_json(json::parse(R"({"base_point": 0, "K": 1, "J": 1, "coeffs": [[1, 0]]})")),
               ConfigError);
  EXPECT_THROW(io::series_from_json(json::parse(R"({"base_point": 0, "K": -1, "J": 1, "coeffs": []})")), ConfigError);
  EXPECT_NO_THROW(io::series_from_json(
      json::parse(R"({"base_point": 0, "K": 1, "J": 1, "coeffs": [[1, 0, 0.5, 0], [-1, 0, 0.5, 0]]})")));
}

TEST(NormalForm, JsonCarriesEveryOrder) {
  SymbolModel m;
  auto p1 = FourierTaylorSeries::monomial(0.0, 2, 4, 1, 0, 0.5);
  p1.at(-1, 0) = 0.5;
  const auto p = FormalDeformation::of_model(m, 2, 4, 2, {p1});
  const auto j = io::normal_form_to_json(birkhoff_normal_form(p, m));
  EXPECT_EQ(j.at("eps_cut"), 2);
  EXPECT_EQ(j.at("g_eps").size(), 2u);
  ASSERT_EQ(j.at("v_eps").size(), 1u);
  const auto v0 = io::series_from_json(j.at("v_eps")[0]);
  EXPECT_EQ(v0(1, 0), cplx(0.5, 0.0));
  EXPECT_EQ(v0(-1, 0), cplx(0.5, 0.0));
  EXPECT_TRUE(j.at("residual").contains("coeffs"));
}

TEST(PlaneSymbol, ParsesTriples) {
  const auto p = io::plane_polynomial_from_json(json::parse("[[2, 0, 1], [0, 2, 1], [0, 0, -1]]"));
  EXPECT_EQ(p(1.0, 1.0), 1.0);
  EXPECT_EQ(p.degree(), 2);
  EXPECT_THROW(io::plane_polynomial_from_json(json::parse("[[-1, 0, 1]]")), ConfigError);
  EXPECT_THROW(io::plane_polynomial_from_json(json::parse("[[1, 0]]")), ConfigError);
  EXPECT_THROW(io::plane_polynomial_from_json(json::parse("{}")), ConfigError);
}

TEST(Csv, FormattingIsFixed) {
  EXPECT_EQ(io::format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(io::format_number(2.0), "2");
  EXPECT_EQ(io::format_number(-0.375), "-0.375");
  EXPECT_EQ(io::format_number(1e300), "1.0000000000000001e+300");
  io::CsvTable t({"a", "b"});
  t.add_row({1.0, 0.25});
  EXPECT_EQ(t.str(), "a,b\n1,0.25\n");
  EXPECT_THROW(t.add_row({1.0}), ContractError);
  EXPECT_THROW(io::CsvTable({}), ContractError);
  EXPECT_EQ(io::CsvTable({"x"}).str(), "x\n");
}

TEST(Csv, SweepLayout) {
  std::vector<SweepRecord> r{{0.5, 2.0, {0.1, 0.2}, {0, 1}}, {0.25, 4.0, {0.3, 0.4}, {1, 0}}};
  EXPECT_EQ(io::sweep_csv(r, 2),
            "inv_hbar,lambda_0,lambda_1,branch_0,branch_1\n"
            "2,0.10000000000000001,0.20000000000000001,0,1\n"
            "4,0.29999999999999999,0.40000000000000002,1,0\n");
  EXPECT_EQ(io::sweep_csv({}, 1), "inv_hbar,lambda_0,branch_0\n");
  EXPECT_THROW(io::sweep_csv(r, 3), ContractError);
}

TEST(Csv, MatrixTriplets) {
  SymbolModel m;
  m.v0 = FourierPotential::from_trig(0.0, {}, {1.0});
  const auto op = build_circle_operator(m, 1.0, {0, 1});
  EXPECT_EQ(io::matrix_triplets_csv(op),
            "row,col,re,im\n"
            "0,1,0,0.5\n"
            "1,0,0,-0.5\n"
            "1,1,1,0\n");
}

TEST(Output, FiniteOrString) {
  EXPECT_EQ(io::finite_or_string(1.5), json(1.5));
  EXPECT_EQ(io::finite_or_string(std::numeric_limits<double>::infinity()), json("inf"));
  EXPECT_EQ(io::finite_or_string(-std::numeric_limits<double>::infinity()), json("-inf"));
  EXPECT_EQ(io::finite_or_string(std::nan("")), json("nan"));
}

TEST(Output, AtomicWriteReplacesWithoutLeftovers) {
  const auto d = scratch_dir("atomic");
  io::atomic_write(d / "out.csv", "first\n");
  io::atomic_write(d / "out.csv", "second\n");
  EXPECT_EQ(slurp(d / "out.csv"), "second\n");
  EXPECT_FALSE(fs::exists(d / "out.csv.tmp"));
  EXPECT_THROW(io::atomic_write(d / "no_such_dir" / "x.csv", "x"), ContractError);
}
