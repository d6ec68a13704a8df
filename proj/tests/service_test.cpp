#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cli_app.hpp"
#include "httplib.h"
#include "routerisk/http_server.hpp"
#include "routerisk/service.hpp"

namespace routerisk {
namespace {

using service::json;
const std::string kDataDir = ROUTERISK_DATA_DIR;

const service::Service& svc() {
  static const service::Service s(builtin_presets());
  return s;
}

std::string routes_text(const std::string& file) {
  std::ifstream in(kDataDir + "/routes/" + file);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> field_names(const json& body) {
  std::vector<std::string> out;
  for (const auto& f : body["fields"]) out.push_back(f["field"].get<std::string>());
  return out;
}

// --- handlers --------------------------------------------------------------

TEST(Service, Health) {
  auto r = svc().health();
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["status"], "ok");
  EXPECT_EQ(r.body["engine_version"], "1.0.0");
}

TEST(Service, Presets) {
  auto r = svc().get_presets();
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["preset_version"], 1);
  ASSERT_EQ(r.body["environments"].size(), 5u);
  for (const auto& env : r.body["environments"]) {
    const double exact = env["exact_rate_per_hour"];
    const double derived = env["derived_rate_per_hour"];
    EXPECT_LE(std::abs(derived - exact) / exact, 0.01) << env["mode"];
  }
  EXPECT_NEAR(r.body["reference_prevalence"]["fraction"].get<double>(), 0.008656, 1e-6);
}

TEST(Service, ScoreJsonRoutes) {
  json req = {{"routes",
               {{{"id", "bus"},
                 {"label", "walk and bus"},
                 {"segments",
                  {{{"mode", "walking"}, {"distance_m", 126}},
                   {{"mode", "city_bus"}, {"stops", 18}},
                   {{"mode", "walking"}, {"distance_m", 1080}}}}},
                {{"id", "metro"},
                 {"segments",
                  {{{"mode", "walking"}, {"distance_m", 190}},
                   {{"mode", "brt"}, {"stops", 2}},
                   {{"mode", "walking"}, {"distance_m", 618}},
                   {{"mode", "subway"}, {"stops", 6}},
                   {{"mode", "walking"}, {"distance_m", 1020}}}}},
                {{"id", "car"}, {"segments", {{{"mode", "car"}, {"minutes", 28}}}}}}}};
  auto r = svc().score(req.dump());
  ASSERT_EQ(r.status, 200) << r.body.dump();
  const auto& reports = r.body["reports"];
  ASSERT_EQ(reports.size(), 3u);
  EXPECT_EQ(reports[0]["route_id"], "metro");
  EXPECT_EQ(reports[0]["rank"], 1);
  EXPECT_NEAR(reports[0]["total"].get<double>(), 0.02623, 5e-4);
  EXPECT_NEAR(reports[1]["total"].get<double>(), 0.08334, 5e-4);
  EXPECT_EQ(reports[1]["label"], "walk and bus");
  EXPECT_EQ(reports[2]["route_id"], "car");
  EXPECT_EQ(reports[1]["segments"].size(), 3u);
  EXPECT_EQ(r.body["rate_mode"], "exact");
}

TEST(Service, ScoreRouteDocument) {
  json req = {{"routes_text", routes_text("balad.routes")}};
  auto r = svc().score(req.dump());
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["reports"][0]["route_id"], "balad-4");
}

TEST(Service, ScoreOptions) {
  json base = {{"routes", {{{"id", "x"}, {"segments", {{{"mode", "brt"}, {"hours", 1}}}}}}}};
  auto exact = svc().score(base.dump()).body["reports"][0]["total"].get<double>();

  json doubled = base;
  doubled["prevalence"] = {{"active_cases", 727550 * 2}, {"population", 84055000}};
  auto r = svc().score(doubled.dump());
  ASSERT_EQ(r.status, 200);
  EXPECT_NEAR(r.body["reports"][0]["segments"][0]["rate_per_hour"].get<double>(), 2 * 0.052831, 1e-12);

  json derived = base;
  derived["derived"] = true;
  r = svc().score(derived.dump());
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["rate_mode"], "derived");
  EXPECT_NEAR(r.body["reports"][0]["total"].get<double>(), exact, 0.01 * exact);

  json active = base;
  active["routes"][0]["segments"][0]["activity"] = "intense";
  EXPECT_GT(svc().score(active.dump()).body["reports"][0]["total"].get<double>(), exact);
  active["routes"][0]["segments"][0]["activity"] = 2000;
  EXPECT_EQ(svc().score(active.dump()).status, 200);
}

TEST(Service, MalformedBodies) {
  EXPECT_EQ(svc().score("{not json").status, 400);
  EXPECT_EQ(svc().score("[1,2]").status, 400);
  auto r = svc().score("{}");
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(field_names(r.body), std::vector<std::string>{"routes"});
  r = svc().score(R"({"routes": []})");
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["fields"][0]["message"], "no routes");
}

TEST(Service, FieldErrorsArePrecise) {
  json req = {{"routes",
               {{{"id", "a"},
                 {"segments",
                  {{{"mode", "walking"}, {"hours", 1}},
                   {{"mode", "city_bus"}, {"stops", -3}},
                   {{"mode", "car"}, {"distance_m", 5}},
                   {{"mode", "subway"}, {"stops", 2}, {"hours", 1}},
                   {{"mode", "brt"}, {"stops", "three"}}}}},
                {{"segments", json::array()}}}},
              {"prevalence", 3},
              {"derived", "yes"},
              {"walking_speed_kmh", -1}};
  auto r = svc().score(req.dump());
  ASSERT_EQ(r.status, 400);
  auto names = field_names(r.body);
  for (const char* expected : {"routes[0].segments[1]", "routes[0].segments[2]", "routes[0].segments[3]",
                               "routes[0].segments[4].stops", "routes[1].id", "routes[1].segments", "prevalence",
                               "derived", "walking_speed_kmh"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), expected), names.end()) << expected << " in " << r.body.dump();
  }
}

TEST(Service, UnknownModeAndModelRangeAre422) {
  json req = {{"routes", {{{"id", "a"}, {"segments", {{{"mode", "tram"}, {"hours", 1}}}}}}}};
  auto r = svc().score(req.dump());
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(field_names(r.body), std::vector<std::string>{"routes[0].segments[0].mode"});

  json sitting = {{"routes", {{{"id", "a"}, {"segments", {{{"mode", "walking"}, {"hours", 1}, {"activity", "sitting"}}}}}}}};
  EXPECT_EQ(svc().score(sitting.dump()).status, 422);
}

TEST(Service, MissingPresetIs422) {
  auto only_car = parse_presets(R"(format = routerisk-presets
version = 1
prevalence.active_cases = 1
prevalence.population = 100
car.length_m = 1.5
car.width_m = 1.2
car.capacity = 4
car.k = -2.7
car.r_mean_m = 0.48
car.n_infected = 0.04
car.rate = 0.4
)");
  service::Service s(only_car);
  json req = {{"routes", {{{"id", "a"}, {"segments", {{{"mode", "subway"}, {"stops", 2}}}}}}}};
  EXPECT_EQ(s.score(req.dump()).status, 422);
}

TEST(Service, Sweep) {
  auto r = svc().sweep(R"({"lengths_m": [20, 100], "densities": [0.1, 0.5], "width_m": 4})");
  ASSERT_EQ(r.status, 200) << r.body.dump();
  const auto& pts = r.body["points"];
  ASSERT_EQ(pts.size(), 4u);
  EXPECT_LT(pts[0]["probability"].get<double>(), pts[1]["probability"].get<double>());
  EXPECT_GT(pts[0]["probability"].get<double>(), pts[2]["probability"].get<double>());

  auto defaults = svc().sweep("{}");
  ASSERT_EQ(defaults.status, 200);
  EXPECT_EQ(defaults.body["points"].size(), 600u);

  auto bad = svc().sweep(R"({"lengths_m": [10, -1], "hours": 0})");
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(field_names(bad.body), (std::vector<std::string>{"hours", "lengths_m[1]"}));
  EXPECT_EQ(svc().sweep(R"({"activity": "sitting"})").status, 422);
}

// --- HTTP ------------------------------------------------------------------

class HttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    service::mount(server_, svc());
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  httplib::Client client() { return httplib::Client("127.0.0.1", port_); }

  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST_F(HttpTest, EndpointsRoundTrip) {
  auto c = client();
  auto health = c.Get("/api/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(health->get_header_value("Access-Control-Allow-Origin"), "*");
  EXPECT_EQ(json::parse(health->body)["status"], "ok");

  auto presets = c.Get("/api/presets");
  ASSERT_TRUE(presets);
  EXPECT_EQ(json::parse(presets->body), svc().get_presets().body);

  json req = {{"routes_text", routes_text("neshan.routes")}};
  auto score = c.Post("/api/score", req.dump(), "application/json");
  ASSERT_TRUE(score);
  EXPECT_EQ(score->status, 200);
  EXPECT_EQ(json::parse(score->body)["reports"][0]["route_id"], "neshan-4");

  auto bad = c.Post("/api/score", "{oops", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);

  auto sweep = c.Post("/api/sweep", R"({"lengths_m": [5], "densities": [1]})", "application/json");
  ASSERT_TRUE(sweep);
  EXPECT_EQ(sweep->status, 200);

  auto missing = c.Get("/api/nothing");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  auto options = c.Options("/api/score");
  ASSERT_TRUE(options);
  EXPECT_EQ(options->status, 204);
}

// --- CLI -------------------------------------------------------------------

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "routerisk");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << content;
  return p;
}

TEST(Cli, ScoreBest) {
  auto r = run_cli({"score", kDataDir + "/routes/neshan.routes", "--best"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "neshan-4\n");
  r = run_cli({"score", kDataDir + "/routes/balad.routes", "--best"});
  EXPECT_EQ(r.out, "balad-4\n");
}

TEST(Cli, ScoreTable) {
  auto r = run_cli({"score", kDataDir + "/routes/neshan.routes"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("neshan-6"), std::string::npos);
  EXPECT_NE(r.out.find("city_bus"), std::string::npos);
}

TEST(Cli, JsonMatchesHttpBitForBit) {
  auto r = run_cli({"score", kDataDir + "/routes/balad.routes", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto cli_body = json::parse(r.out);
  auto http_body = svc().score(json{{"routes_text", routes_text("balad.routes")}}.dump()).body;
  ASSERT_EQ(cli_body["reports"].size(), http_body["reports"].size());
  for (std::size_t i = 0; i < cli_body["reports"].size(); ++i) {
    EXPECT_EQ(cli_body["reports"][i]["total"].get<double>(), http_body["reports"][i]["total"].get<double>());
  }
  EXPECT_EQ(cli_body, http_body);
}

TEST(Cli, ScoreInputErrors) {
  auto empty = temp_file("routerisk_empty.routes", "# nothing here\n");
  auto r = run_cli({"score", empty.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("no routes"), std::string::npos);

  auto broken = temp_file("routerisk_broken.routes", "route = a\ntram hours=1\n");
  r = run_cli({"score", broken.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(":2:"), std::string::npos) << r.err;

  r = run_cli({"score", "/nonexistent/file.routes"});
  EXPECT_EQ(r.code, 2);
  std::filesystem::remove(empty);
  std::filesystem::remove(broken);
}

TEST(Cli, BadFlagsAreUsageErrors) {
  EXPECT_NE(run_cli({"score", kDataDir + "/routes/neshan.routes", "--bogus"}).code, 0);
  EXPECT_NE(run_cli({"score", kDataDir + "/routes/neshan.routes", "--prevalence", "2"}).code, 0);
  EXPECT_NE(run_cli({}).code, 0);
  EXPECT_EQ(run_cli({"--help"}).code, 0);
}

TEST(Cli, CalibrateCheck) {
  auto r = run_cli({"calibrate", kDataDir + "/tables", "--check", "--env", "subway,brt,city_bus"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_EQ(r.out.find("BREACH"), std::string::npos);
  r = run_cli({"calibrate", kDataDir + "/tables", "--check", "--env", "open"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("BREACH"), std::string::npos);
  r = run_cli({"calibrate", kDataDir + "/tables"});
  EXPECT_EQ(r.code, 0);
  r = run_cli({"calibrate", "/nonexistent"});
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, SimulateScene) {
  auto r = run_cli({"simulate", "--scene", kDataDir + "/scenes/fig_grid.scene", "--trials", "20000"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("closed_form"), std::string::npos);
  EXPECT_NE(r.out.find("effective_c"), std::string::npos);
  r = run_cli({"simulate", "--m", "3", "--l", "1", "--carriers", "5"});
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, SweepCsv) {
  auto r = run_cli({"sweep", "--lengths", "20,100", "--densities", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string header;
  std::getline(lines, header);
  EXPECT_EQ(header, "length_m,density,probability");
  int rows = 0;
  for (std::string line; std::getline(lines, line);) ++rows;
  EXPECT_EQ(rows, 2);
  EXPECT_EQ(run_cli({"sweep", "--lengths", "a,b"}).code, 2);
}

}  // namespace
}  // namespace routerisk
