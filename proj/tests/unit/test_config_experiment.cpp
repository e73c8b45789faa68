#include <algorithm>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "lrmr/config.hpp"
#include "lrmr/experiment.hpp"

namespace {

const char* kSmall = R"(schema_version = 1
# tiny design
d1 = 5
d2 = 4
r = 2
spectrum = list 3 2
corruption = missing 0.1
sigma_eps = 0.2
n_grid = 60 120
replicates = 3
regularizer = scad lambda=gradient:1
regularizer = mcp lambda=fixed:0.4 shape=3
omega = ratio 1.5
seed = 11
)";

std::string message_of(const std::string& text) {
  try {
    lrmr::parse_config(text, "cfg");
  } catch (const lrmr::ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, ParsesFields) {
  const auto c = lrmr::parse_config(kSmall);
  EXPECT_EQ(c.d1, 5);
  EXPECT_EQ(c.rank(), 2);
  EXPECT_EQ(c.n_grid.size(), 2u);
  ASSERT_EQ(c.regularizers.size(), 2u);
  EXPECT_EQ(c.regularizers[1].kind, lrmr::PenaltyKind::Mcp);
  EXPECT_EQ(c.regularizers[1].shape, 3.0);
  EXPECT_EQ(c.regularizers[0].lambda.kind, lrmr::LambdaRule::Kind::Gradient);
  EXPECT_EQ(lrmr::corruption_name(c.corruption), "missing");
  EXPECT_EQ(c.seed, 11u);
  EXPECT_FALSE(c.timing);
}

TEST(Config, RoundTripsThroughText) {
  const auto c = lrmr::parse_config(kSmall);
  const std::string text = lrmr::to_text(c);
  EXPECT_EQ(lrmr::to_text(lrmr::parse_config(text)), text);
  for (const auto& name : lrmr::preset_names()) {
    const auto p = lrmr::preset_config(name);
    EXPECT_EQ(lrmr::to_text(lrmr::parse_config(lrmr::to_text(p))), lrmr::to_text(p)) << name;
  }
}

TEST(Config, ErrorsNameTheLine) {
  std::string text = kSmall;
  text += "sigma_eps = 0.3\n";
  EXPECT_NE(message_of(text).find("cfg:15"), std::string::npos) << message_of(text);
  EXPECT_NE(message_of(text).find("duplicate"), std::string::npos);

  text = kSmall;
  text.replace(text.find("d2 = 4"), 6, "d2 = four");
  EXPECT_NE(message_of(text).find("cfg:4"), std::string::npos) << message_of(text);

  EXPECT_NE(message_of("d1 = 3\n").find("schema_version"), std::string::npos);
  EXPECT_NE(message_of("schema_version = 2\n").find("cfg:1"), std::string::npos);
  EXPECT_NE(message_of(std::string(kSmall) + "bogus = 1\n").find("unknown key"), std::string::npos);
  EXPECT_FALSE(message_of(std::string(kSmall) + "regularizer = lasso lambda=1\n").empty());
  EXPECT_FALSE(message_of(std::string(kSmall) + "regularizer = scad\n").empty());
}

TEST(Config, RejectsInfeasibleOmega) {
  std::string text = kSmall;
  text.replace(text.find("omega = ratio 1.5"), 17, "omega = ratio 0.9");
  EXPECT_THROW(lrmr::parse_config(text), lrmr::ConfigError);
  text = kSmall;
  text.replace(text.find("omega = ratio 1.5"), 17, "omega = fixed 4.0");
  EXPECT_THROW(lrmr::parse_config(text), lrmr::ConfigError);
  text = kSmall;
  text.replace(text.find("omega = ratio 1.5"), 17, "omega = fixed 5.0");
  EXPECT_NO_THROW(lrmr::parse_config(text));
}

TEST(Config, Rules) {
  EXPECT_EQ(lrmr::LambdaRule::parse("0.5").kind, lrmr::LambdaRule::Kind::Fixed);
  EXPECT_EQ(lrmr::LambdaRule::parse("rate:0.25").value, 0.25);
  EXPECT_THROW(lrmr::LambdaRule::parse("magic:1"), lrmr::ConfigError);
  EXPECT_THROW(lrmr::OmegaRule::parse("ratio"), lrmr::ConfigError);
  EXPECT_THROW(lrmr::preset_config("nope"), lrmr::ConfigError);
}

TEST(Csv, FormatAndHeader) {
  EXPECT_EQ(lrmr::format_real(0.1), "0.10000000000000001");
  EXPECT_EQ(lrmr::format_real(2.0), "2");
  EXPECT_EQ(lrmr::format_real(std::nan("")), "nan");
  EXPECT_EQ(lrmr::format_real(-1.0 / 0.0), "-inf");
  const std::string header = lrmr::csv_header();
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), 24);
  EXPECT_EQ(header.rfind("seed,replicate,", 0), 0u);
}

TEST(Experiment, RowOrderAndSchema) {
  const auto c = lrmr::parse_config(kSmall);
  const auto rows = lrmr::run_experiment(c);
  ASSERT_EQ(rows.size(), 2u * 2u * 3u);
  EXPECT_EQ(rows[0].n, 60);
  EXPECT_EQ(rows[0].reg_kind, "scad");
  EXPECT_EQ(rows[2].replicate, 2);
  EXPECT_EQ(rows[3].reg_kind, "mcp");
  EXPECT_EQ(rows[3].lambda, 0.4);
  EXPECT_EQ(rows[6].n, 120);
  for (const auto& row : rows) {
    EXPECT_FALSE(row.runtime_ms.has_value());
    ASSERT_TRUE(row.recovery.has_value());
    EXPECT_LE(row.omega, 7.5 + 1e-12);
    const std::string line = lrmr::csv_row(row);
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 24);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    EXPECT_EQ(line.back(), ',');  // runtime_ms empty
  }
}

TEST(Experiment, ThreadCountDoesNotChangeOutput) {
  auto c = lrmr::parse_config(kSmall);
  std::ostringstream one, four;
  lrmr::write_csv(one, lrmr::run_experiment(c));
  c.threads = 4;
  lrmr::write_csv(four, lrmr::run_experiment(c));
  EXPECT_EQ(one.str(), four.str());
  EXPECT_EQ(one.str().find('\r'), std::string::npos);
}

TEST(Experiment, OracleRuleNeedsTruth) {
  const auto c = lrmr::parse_config(kSmall);
  lrmr::SimulationConfig sim;
  sim.d1 = 5;
  sim.d2 = 4;
  sim.spectrum = c.spectrum;
  sim.n = 30;
  auto data = lrmr::simulate(sim, 1, 0);
  const auto pair = lrmr::SurrogatePair::build(data.observations);
  EXPECT_GT(lrmr::resolve_lambda(lrmr::LambdaRule::parse("rate:1"), data, pair, 7.5), 0.0);
  data.truth.reset();
  EXPECT_EQ(lrmr::resolve_lambda(lrmr::LambdaRule::parse("fixed:2"), data, pair, 7.5), 2.0);
  EXPECT_THROW(lrmr::resolve_lambda(lrmr::LambdaRule::parse("gradient:1"), data, pair, 7.5), lrmr::ConfigError);
}

}  // namespace
