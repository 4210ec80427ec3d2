// Model-free scorer speaking the external-scorer protocol. Score for each
// request is (code points of hyp mod 7) / 7.
//
// Fault injection for tests:
//   --omit ID       drop the response for ID
//   --duplicate ID  answer ID twice
//   --garbage       emit a non-JSON line after the first response
//   --crash-after N exit 3 after N responses
//   --sleep S       sleep S seconds before reading input
//   --require-ref   fail when a request carries ref = null

#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <iostream>
#include <string>
#include <thread>

#include "xqm/utf8.hpp"

int main(int argc, char** argv) {
  std::string omit, duplicate;
  bool garbage = false, require_ref = false;
  long crash_after = -1;
  double sleep_s = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    auto value = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::cerr << "mock-scorer: " << arg << " needs a value\n";
        std::exit(2);
      }
      return argv[++i];
    };
    if (arg == "--omit") omit = value();
    else if (arg == "--duplicate") duplicate = value();
    else if (arg == "--garbage") garbage = true;
    else if (arg == "--require-ref") require_ref = true;
    else if (arg == "--crash-after") crash_after = std::stol(value());
    else if (arg == "--sleep") sleep_s = std::stod(value());
    else {
      std::cerr << "mock-scorer: unknown argument " << arg << "\n";
      return 2;
    }
  }
  if (sleep_s > 0) std::this_thread::sleep_for(std::chrono::duration<double>(sleep_s));

  std::string line;
  long answered = 0;
  long lineno = 0;
  while (std::getline(std::cin, line)) {
    ++lineno;
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "mock-scorer: line " << lineno << ": " << e.what() << "\n";
      return 1;
    }
    if (!req.contains("id") || !req.contains("hyp")) {
      std::cerr << "mock-scorer: line " << lineno << ": missing id or hyp\n";
      return 1;
    }
    if (require_ref && req["ref"].is_null()) {
      std::cerr << "mock-scorer: line " << lineno << ": reference required\n";
      return 1;
    }
    if (crash_after >= 0 && answered >= crash_after) {
      std::cerr << "mock-scorer: simulated crash\n";
      return 3;
    }
    const auto id = req["id"].get<std::string>();
    const auto hyp = req["hyp"].get<std::string>();
    const double score = static_cast<double>(xqm::utf8::length(hyp) % 7) / 7.0;
    if (id != omit) {
      nlohmann::ordered_json res;
      res["id"] = id;
      res["score"] = score;
      std::cout << res.dump() << "\n";
      if (id == duplicate) std::cout << res.dump() << "\n";
      std::cout.flush();
    }
    if (garbage && answered == 0) std::cout << "not json\n" << std::flush;
    ++answered;
  }
  return 0;
}
