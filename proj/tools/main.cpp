#include <csignal>
#include <iostream>

#include "qunit/cli.hpp"

namespace {

qunit::CancellationToken g_cancel;

extern "C" void on_signal(int) { g_cancel.cancel(); }

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  return qunit::run_cli(argc, argv, std::cout, std::cerr, &g_cancel);
}
