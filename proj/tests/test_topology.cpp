#include <doctest.h>

#include "support.hpp"
#include "uwbrtls/error.hpp"

using namespace uwb;
using namespace uwbtest;

TEST_SUITE("topology") {

TEST_CASE("reference layouts are valid") {
  CHECK(rectangle().problems().empty());
  CHECK(cascade().problems().empty());
  CHECK_NOTHROW(cascade().validate());
  CHECK(cascade().primary() == "MA1");
  CHECK(cascade().masters().size() == 6);
}

TEST_CASE("baseline and positions") {
  const auto t = rectangle();
  CHECK(t.baseline("MA1", "SA2") == doctest::Approx(std::sqrt(52.0)));
  CHECK(t.positions().size() == 4);
  CHECK_THROWS_AS(t.anchor("nope"), Error);
}

TEST_CASE("two primaries are rejected") {
  auto t = cascade();
  t.master_level["MA2"] = 1;
  t.follow.erase("MA2");
  CHECK_FALSE(t.problems().empty());
  CHECK_THROWS_AS(t.validate(), Error);
}

TEST_CASE("a level skip is a problem") {
  auto t = cascade();
  t.follow["MA5"] = {"MA1"};  // level 3 following level 1
  CHECK_FALSE(t.problems().empty());
}

TEST_CASE("slaves must follow masters") {
  auto t = rectangle();
  t.follow["SA2"] = {"SA1"};
  CHECK_FALSE(t.problems().empty());
}

TEST_CASE("sibling masters need distinct lag slots") {
  auto t = cascade();
  t.lag_slots["MA3"] = 1;
  CHECK_FALSE(t.problems().empty());
}

TEST_CASE("broken chains are reported as orphans, downstream included") {
  auto t = cascade();
  t.follow.erase("MA4");
  const auto orphans = t.orphans();
  for (const char* id : {"MA4", "MA5", "MA6", "SA4", "SA5", "SA6"}) {
    CHECK(std::count(orphans.begin(), orphans.end(), id) == 1);
  }
  // SA2 still reaches the primary directly.
  CHECK(std::count(orphans.begin(), orphans.end(), "SA2") == 0);
  CHECK_THROWS_AS(t.validate(), UnsyncableError);
}

TEST_CASE("duplicate ids") {
  auto t = rectangle();
  t.anchors.push_back(t.anchors.back());
  CHECK_FALSE(t.problems().empty());
}

}  // TEST_SUITE
