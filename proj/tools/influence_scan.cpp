#include "influence/pipeline.hpp"

int main(int argc, char** argv) {
  return influence::pipeline::run_cli(argc, argv);
}
