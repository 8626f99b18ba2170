#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "genens/data.hpp"
#include "genens/error.hpp"
#include "support.hpp"

using namespace genens;

namespace {

std::shared_ptr<const Schema> xy_schema() {
  return std::make_shared<const Schema>(parse_schema("x:numeric, y:numeric:target"));
}

}  // namespace

TEST_CASE("schema parsing and validation") {
  const Schema s = parse_schema("sex:categorical(M|F|I), length:numeric, rings:numeric:target");
  CHECK(s.size() == 3);
  CHECK(s.target_index() == 2);
  CHECK(s.column(0).levels == std::vector<std::string>{"M", "F", "I"});
  CHECK(s.task() == Task::regression);
  CHECK(parse_schema(format_schema(s)) == s);

  CHECK_THROWS_AS(parse_schema("a:numeric, b:numeric"), Error);
  CHECK_THROWS_AS(parse_schema("a:numeric:target, b:numeric:target"), Error);
  CHECK_THROWS_AS(parse_schema("a:categorical(x|x), b:numeric:target"), Error);
  CHECK_THROWS_AS(parse_schema("a:categorical(x|), b:numeric:target"), Error);
  CHECK_THROWS_AS(parse_schema("a:text, b:numeric:target"), Error);

  const Schema c = parse_schema("a:numeric, y:categorical(no|yes):target");
  CHECK(c.task() == Task::classification);
  CHECK(c.n_classes() == 2);
}

TEST_CASE("csv reading") {
  std::istringstream in("x,y\n1,2\n3,4\n");
  const Dataset d = read_csv(in, xy_schema());
  CHECK(d.rows() == 2);
  CHECK(d.at(1, 0) == 3.0);
  CHECK(d.provenance().source == Provenance::Source::real);

  std::istringstream bad("x,y\nabc,2\n");
  try {
    read_csv(bad, xy_schema());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row() == 1);
    CHECK(e.column() == "x");
  }

  auto colours = std::make_shared<const Schema>(
      parse_schema("colour:categorical(red|green), y:numeric:target"));
  std::istringstream level("colour,y\nred,1\nblue,2\n");
  try {
    read_csv(level, colours);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row() == 2);
    CHECK(e.column() == "colour");
  }

  std::istringstream empty("");
  CHECK_THROWS_AS(read_csv(empty, xy_schema()), Error);
  std::istringstream header("y,x\n1,2\n");
  CHECK_THROWS_AS(read_csv(header, xy_schema()), Error);
}

TEST_CASE("csv round trip is bit-identical") {
  Engine rng = make_engine(3);
  std::vector<double> cells;
  for (int i = 0; i < 500; ++i) {
    cells.push_back(standard_normal(rng) * std::pow(10.0, static_cast<double>(i % 40) - 20.0));
    cells.push_back(std::ldexp(standard_normal(rng), i % 60 - 30));
  }
  cells.push_back(0.1);
  cells.push_back(-0.0);
  const Dataset d(xy_schema(), cells);
  std::stringstream io;
  write_csv(io, d);
  const Dataset back = read_csv(io, xy_schema());
  REQUIRE(back.cells().size() == d.cells().size());
  for (std::size_t i = 0; i < cells.size(); ++i) CHECK(back.cells()[i] == d.cells()[i]);

  auto cat = std::make_shared<const Schema>(parse_schema("c:categorical(a|b|c), y:numeric:target"));
  const Dataset dc(cat, {2, 1.5, 0, -3, 1, 7});
  std::stringstream io2;
  write_csv(io2, dc);
  CHECK(read_csv(io2, cat).cells() == dc.cells());
}

TEST_CASE("train_test_split") {
  const Dataset d = test::random_regression(100, 2, 1.0, 1);
  const auto [train, test_part] = train_test_split(d, 0.25, 7);
  CHECK(train.rows() == 75);
  CHECK(test_part.rows() == 25);
  const auto again = train_test_split(d, 0.25, 7);
  CHECK(again.first.cells() == train.cells());
  CHECK(again.second.cells() == test_part.cells());
  const auto other = train_test_split(d, 0.25, 8);
  CHECK(other.second.cells() != test_part.cells());

  // Four distinct rows partition exactly.
  const Dataset four = test::table(xy_schema(), {{0, 0}, {1, 1}, {2, 2}, {3, 3}});
  const auto [tr, te] = train_test_split(four, 0.25, 7);
  CHECK(tr.rows() == 3);
  CHECK(te.rows() == 1);
  std::multiset<double> seen;
  for (std::size_t r = 0; r < tr.rows(); ++r) seen.insert(tr.at(r, 0));
  seen.insert(te.at(0, 0));
  CHECK(seen == std::multiset<double>{0, 1, 2, 3});

  CHECK_THROWS_AS(train_test_split(d, 0.0, 1), Error);
  CHECK_THROWS_AS(train_test_split(d, 1.0, 1), Error);
}

TEST_CASE("encoder") {
  const Dataset d = test::table(xy_schema(), {{1, 0}, {2, 0}, {3, 0}});
  const FeatureMatrix z = encode(d, d, true);
  CHECK(z.x[0] == doctest::Approx(-1.224744871391589).epsilon(1e-12));
  CHECK(z.x[1] == doctest::Approx(0.0));
  CHECK(z.x[2] == doctest::Approx(1.224744871391589).epsilon(1e-12));

  const FeatureMatrix raw = encode(d, d, false);
  CHECK(raw.x == std::vector<double>{1, 2, 3});

  auto cat = std::make_shared<const Schema>(
      parse_schema("c:categorical(a|b|c), k:numeric, y:numeric:target"));
  const Dataset dc(cat, {0, 5, 1, 2, 5, 2, 1, 5, 3, 0, 5, 4});
  const FeatureMatrix oh = encode(dc, dc, false);
  CHECK(oh.cols == 4);
  for (std::size_t r = 0; r < oh.rows; ++r) CHECK(oh.x[r * 4] + oh.x[r * 4 + 1] + oh.x[r * 4 + 2] == 1.0);
  CHECK(oh.y == std::vector<double>{1, 2, 3, 4});

  // Standardized training columns have mean 0 and population stddev 1; the
  // constant column maps to 0.
  const FeatureMatrix s = encode(dc, dc, true);
  for (std::size_t j = 0; j < s.cols; ++j) {
    double mean = 0.0;
    double ss = 0.0;
    for (std::size_t r = 0; r < s.rows; ++r) mean += s.x[r * s.cols + j];
    mean /= static_cast<double>(s.rows);
    for (std::size_t r = 0; r < s.rows; ++r) ss += std::pow(s.x[r * s.cols + j] - mean, 2);
    CHECK(std::abs(mean) < 1e-9);
    if (j == 3) CHECK(ss == 0.0);
    else CHECK(std::sqrt(ss / static_cast<double>(s.rows)) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("scaler statistics ignore the rows it is applied to") {
  const Dataset train = test::random_regression(30, 3, 1.0, 4);
  const Dataset a = test::random_regression(10, 3, 1.0, 5);
  const Dataset b = test::random_regression(10, 3, 1.0, 6);
  const FeatureMatrix fa = encode(train, a, true);
  const FeatureMatrix fb = encode(train, b, true);
  REQUIRE(fa.scaler);
  CHECK(fa.scaler->mean == fb.scaler->mean);
  CHECK(fa.scaler->stddev == fb.scaler->stddev);
  CHECK(fa.y == target_values(a));
}
