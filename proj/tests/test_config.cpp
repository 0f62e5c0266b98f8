#include <sstream>

#include <gtest/gtest.h>

#include "dynodom/config.hpp"
#include "support.hpp"

using namespace dynodom;

namespace {

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

std::string dump(const RunConfig& c) {
  std::ostringstream out;
  write_config(c, out);
  return out.str();
}

}  // namespace

TEST(Config, EmptyTextGivesDefaults) {
  EXPECT_EQ(dump(parse_config("")), dump(RunConfig{}));
  EXPECT_EQ(dump(parse_config("# nothing\n\n   \n")), dump(RunConfig{}));
}

TEST(Config, ParsesValuesAndComments) {
  const RunConfig c = parse_config(
      "fx = 300  # focal\n"
      "dist_threshold=0.02\n"
      "enable_pgo = false\n"
      "dynamic_classes = person, dog\n"
      "chamfer_seed = 12345678901234\n");
  EXPECT_DOUBLE_EQ(c.intrinsics.fx, 300.0);
  EXPECT_DOUBLE_EQ(c.voting.dist_threshold, 0.02);
  EXPECT_FALSE(c.enable_pgo);
  EXPECT_EQ(c.dynamic_classes, (std::set<std::string>{"dog", "person"}));
  EXPECT_EQ(c.chamfer.seed, 12345678901234ull);
}

TEST(Config, UnknownKeyReportsLine) {
  EXPECT_EQ(error_line("fx = 300\n\nno_such_key = 1\n"), 3);
  try {
    parse_config("# c\nbogus = 2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(Config, DuplicateKeyReportsLine) {
  EXPECT_EQ(error_line("fx = 300\nfy = 300\nfx = 301\n"), 3);
}

TEST(Config, MalformedLines) {
  EXPECT_EQ(error_line("fx 300\n"), 1);
  EXPECT_EQ(error_line("fx = 3x0\n"), 1);
  EXPECT_EQ(error_line("width = 1.5\n"), 1);
  EXPECT_EQ(error_line("a\nenable_pgo = maybe\n"), 1);
  EXPECT_EQ(error_line("fx = 1\nenable_pgo = maybe\n"), 2);
}

TEST(Config, OutOfRangeValuesFailValidation) {
  EXPECT_THROW(parse_config("kernel_k = -1\n"), PreconditionError);
  EXPECT_THROW(parse_config("dbscan_eps = 0\n"), PreconditionError);
  EXPECT_THROW(parse_config("vote_threshold = 0\n"), PreconditionError);
  EXPECT_THROW(parse_config("match_ratio = 1.5\n"), PreconditionError);
}

TEST(Config, RoundTrip) {
  RunConfig c;
  set_config_value(c, "voxel_size", "0.0125");
  set_config_value(c, "enable_voting", "false");
  set_config_value(c, "dynamic_classes", "");
  set_config_value(c, "seed", "99");
  const std::string text = dump(c);
  EXPECT_EQ(dump(parse_config(text)), text);
  testing_support::TempDir dir("config");
  testing_support::spit(dir / "run.conf", text);
  EXPECT_EQ(dump(read_config(dir / "run.conf")), text);
  EXPECT_THROW(read_config(dir / "missing.conf"), IoError);
}

TEST(Config, ReferenceListsEveryKey) {
  std::ostringstream ref;
  write_config_reference(ref);
  std::istringstream lines(dump(RunConfig{}));
  for (std::string l; std::getline(lines, l);) {
    const std::string key = l.substr(0, l.find(' '));
    EXPECT_NE(ref.str().find("`" + key + "`"), std::string::npos) << key;
  }
}
