// Regenerates tests/data/dump20.xml and its bookkeeping.
#include <fstream>
#include <iostream>

#include "support.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixture DIR\n";
    return 1;
  }
  const std::string dir = argv[1];
  const auto f = crumbs::testing::make_dump_fixture(20130701, 20, crumbs::TimeGrid());
  std::ofstream(dir + "/dump20.xml", std::ios::binary) << f.xml;
  std::ofstream(dir + "/dump20.truth.json", std::ios::binary) << f.truth.to_json() << "\n";
  return 0;
}
