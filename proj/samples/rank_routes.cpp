// Builds two routes in code and ranks them with the built-in presets.

#include <iostream>
#include <vector>

#include "routerisk/route_engine.hpp"

int main() {
  using namespace routerisk;

  std::vector<Route> routes = {
      {"bus", "Walk, city bus, walk",
       {{Mode::walking, WalkDistance{400}, {}}, {Mode::city_bus, TransitStops{10}, {}},
        {Mode::walking, WalkDistance{300}, {}}}},
      {"metro", "Walk, subway, walk",
       {{Mode::walking, WalkDistance{700}, {}}, {Mode::subway, TransitStops{8}, {}},
        {Mode::walking, WalkDistance{250}, {}}}},
  };

  for (const auto& r : rank_routes(routes, builtin_presets(), EngineConfig{})) {
    std::cout << r.route_id << "  " << r.total.value() << "\n";
  }
}
