#include "lipstick/workflowgen.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <set>

#include "lipstick/error.hpp"
#include "lipstick/provquery.hpp"

namespace lipstick::gen {

namespace {

std::string num(std::size_t k) { return std::to_string(k); }

Tuple tuple_of(std::vector<Atom> atoms) {
  Tuple t;
  for (auto& a : atoms) t.values.emplace_back(std::move(a));
  return t;
}

const std::map<std::string, std::int64_t>& price_table() {
  static const std::map<std::string, std::int64_t> table = {
      {"Civic", 20000},          {"Accord", 25000},        {"Audi A3", 29000},
      {"Audi A4", 38000},        {"Audi A6", 52000},       {"BMW 3 Series", 41000},
      {"BMW 5 Series", 54000},   {"BMW X5", 60000},        {"Mercedes C-Class", 43000},
      {"Mercedes E-Class", 56000}, {"Porsche 911", 98000}, {"Volkswagen Golf", 22000},
      {"Volkswagen Passat", 27000}, {"Opel Astra", 21000},
  };
  return table;
}

// Integer field of the first tuple in a (Model, count) bag, or 0.
std::int64_t first_count(const Value& v) {
  const Bag& b = *std::get<BagRef<NoAnnotation>>(v);
  if (b.empty()) return 0;
  return std::get<std::int64_t>(b.tuples.front().atom(1));
}

const Bag& bag_arg(const std::vector<Value>& args, std::size_t i) {
  return *std::get<BagRef<NoAnnotation>>(args.at(i));
}

const std::string& text(const Tuple& t, std::size_t i) { return std::get<std::string>(t.atom(i)); }

Bag calc_bid(const std::vector<Value>& args) {
  const Bag& requests = bag_arg(args, 0);
  const std::int64_t avail = first_count(args.at(1));
  const std::int64_t sold = first_count(args.at(2));
  const Bag& history = bag_arg(args, 3);
  Bag out;
  for (const auto& r : requests.tuples) {
    const std::string& user = text(r, 0);
    const std::string& model = text(r, 2);
    std::optional<std::int64_t> prev;
    for (const auto& h : history.tuples) {
      if (text(h, 1) != user || text(h, 2) != model) continue;
      auto amount = std::get<std::int64_t>(h.atom(3));
      prev = prev ? std::min(*prev, amount) : amount;
    }
    auto amount = calc_bid_amount(model, avail, sold, prev);
    if (!amount) continue;
    out.tuples.push_back(tuple_of({text(r, 1), user, model, *amount}));
  }
  return out;
}

// One car per purchase: the smallest unsold candidate id.
Bag pick_car(const std::vector<Value>& args) {
  const Bag& purchases = bag_arg(args, 0);
  const Bag& candidates = bag_arg(args, 1);
  const Bag& sold = bag_arg(args, 2);
  std::set<std::string> taken;
  for (const auto& s : sold.tuples) taken.insert(text(s, 0));
  std::vector<std::string> free;
  for (const auto& c : candidates.tuples) {
    if (!taken.count(text(c, 0))) free.push_back(text(c, 0));
  }
  std::sort(free.begin(), free.end());
  free.erase(std::unique(free.begin(), free.end()), free.end());
  Bag out;
  std::size_t next = 0;
  for (const auto* p : canonical_order(purchases)) {
    if (next == free.size()) break;
    out.tuples.push_back(tuple_of({free[next++], text(*p, 0), text(*p, 1), text(*p, 2)}));
  }
  return out;
}

const char* kRequestSchema = "(UserId:text, BidId:text, Model:text)";
const char* kPurchaseSchema = "(BidId:text, UserId:text, Model:text, Price:int, DealerNo:int)";
const char* kSaleSchema = "(CarId:text, BidId:text, UserId:text, Model:text, DealerNo:int)";

std::string dealer_module(std::size_t k) {
  const std::string K = num(k);
  std::string s;
  s += "MODULE dealer" + K + "\n";
  s += std::string("  INPUT Requests") + kRequestSchema + "\n";
  s += std::string("  INPUT Purchase") + kPurchaseSchema + "\n";
  s += "  STATE Cars(CarId:text, Model:text)\n";
  s += "  STATE SoldCars(CarId:text, BidId:text)\n";
  s += "  STATE InventoryBids(BidId:text, UserId:text, Model:text, Amount:int)\n";
  s += "  OUTPUT Bids" + K + kPurchaseSchema + "\n";
  s += "  OUTPUT Sale" + K + kSaleSchema + "\n";
  s += R"(  QSTATE {
    ReqModel = FOREACH Requests GENERATE Model;
    InventoryJ = JOIN Cars BY Model, ReqModel BY Model;
    Inventory = FOREACH InventoryJ GENERATE CarId, Cars::Model AS Model;
    SoldInventoryJ = JOIN Inventory BY CarId, SoldCars BY CarId;
    SoldInventory = FOREACH SoldInventoryJ GENERATE Inventory::CarId AS CarId, Model, BidId;
    CarsByModel = GROUP Inventory BY Model;
    SoldByModel = GROUP SoldInventory BY Model;
    NumCarsByModel = FOREACH CarsByModel GENERATE group AS Model, COUNT(Inventory) AS NumAvail;
    NumSoldByModel = FOREACH SoldByModel GENERATE group AS Model, COUNT(SoldInventory) AS NumSold;
    AllInfoByModel = COGROUP Requests BY Model, NumCarsByModel BY Model, NumSoldByModel BY Model;
    NewBids = FOREACH AllInfoByModel GENERATE FLATTEN(CalcBid(Requests, NumCarsByModel, NumSoldByModel, InventoryBids));
    InventoryBids = UNION InventoryBids, NewBids;
)";
  s += "    MyPurchase = FILTER Purchase BY DealerNo == " + K + ";\n";
  s += R"(    CandidatesJ = JOIN Cars BY Model, MyPurchase BY Model;
    Candidates = FOREACH CandidatesJ GENERATE CarId, Cars::Model AS Model;
    CandByModel = COGROUP MyPurchase BY Model, Candidates BY Model;
    NewSales = FOREACH CandByModel GENERATE FLATTEN(PickCar(MyPurchase, Candidates, SoldCars));
    SoldNow = FOREACH NewSales GENERATE CarId, BidId;
    SoldCars = UNION SoldCars, SoldNow;
  }
  QOUT {
)";
  s += "    Bids" + K + " = FOREACH NewBids GENERATE BidId, UserId, Model, Amount AS Price, " + K +
       " AS DealerNo;\n";
  s += "    Sale" + K + " = FOREACH NewSales GENERATE CarId, BidId, UserId, Model, " + K +
       " AS DealerNo;\n";
  s += "  }\n\n";
  return s;
}

std::string dealership_text() {
  std::string s;
  s += std::string("MODULE request\n  INPUT BidRequest") + kRequestSchema +
       "\n  OUTPUT NewRequests" + kRequestSchema + R"(
  QSTATE {
  }
  QOUT {
    NewRequests = FOREACH BidRequest GENERATE UserId, BidId, Model;
  }

)";
  s += std::string("MODULE and\n  INPUT NewRequests") + kRequestSchema + "\n  STATE NoPurchase" +
       kPurchaseSchema + "\n  OUTPUT Requests" + kRequestSchema + "\n  OUTPUT Purchase" +
       kPurchaseSchema + R"(
  QSTATE {
  }
  QOUT {
    Requests = FOREACH NewRequests GENERATE UserId, BidId, Model;
    Purchase = FOREACH NoPurchase GENERATE BidId, UserId, Model, Price, DealerNo;
  }

)";
  for (std::size_t k = 1; k <= kDealers; ++k) s += dealer_module(k);
  s += "MODULE agg\n";
  for (std::size_t k = 1; k <= kDealers; ++k) s += "  INPUT Bids" + num(k) + kPurchaseSchema + "\n";
  s += std::string("  OUTPUT BestBid") + kPurchaseSchema + R"(
  QSTATE {
  }
  QOUT {
    AllBids = UNION Bids1, Bids2, Bids3, Bids4;
    ByUser = GROUP AllBids BY UserId;
    Lowest = FOREACH ByUser GENERATE group AS UserId, MIN(AllBids.Price) AS Price;
    AtLowestJ = JOIN AllBids BY UserId, Lowest BY UserId;
    AtLowest = FILTER AtLowestJ BY AllBids::Price == Lowest::Price;
    Tied = GROUP AtLowest BY AllBids::UserId;
    Winner = FOREACH Tied GENERATE group AS UserId, MIN(AtLowest.DealerNo) AS DealerNo;
    WinnerJ = JOIN AtLowest BY DealerNo, Winner BY DealerNo;
    BestBid = FOREACH WinnerJ GENERATE BidId, AllBids::UserId AS UserId, Model, AllBids::Price AS Price, AtLowest::DealerNo AS DealerNo;
  }

)";
  s += R"(MODULE choice
  INPUT UserChoice(UserId:text, Reserve:int, Accept:bool)
  OUTPUT Choice(UserId:text, Reserve:int, Accept:bool)
  QSTATE {
  }
  QOUT {
    Choice = FOREACH UserChoice GENERATE UserId, Reserve, Accept;
  }

)";
  s += std::string("MODULE xor\n  INPUT BestBid") + kPurchaseSchema +
       "\n  INPUT Choice(UserId:text, Reserve:int, Accept:bool)\n  STATE NoRequests" +
       kRequestSchema + "\n  OUTPUT Purchase" + kPurchaseSchema + "\n  OUTPUT Requests" +
       kRequestSchema + R"(
  QSTATE {
  }
  QOUT {
    Matched = JOIN BestBid BY UserId, Choice BY UserId;
    Accepted = FILTER Matched BY Price <= Reserve AND Accept == true;
    Purchase = FOREACH Accepted GENERATE BidId, BestBid::UserId AS UserId, Model, Price, DealerNo;
    Requests = FOREACH NoRequests GENERATE UserId, BidId, Model;
  }

)";
  s += "MODULE car\n";
  for (std::size_t k = 1; k <= kDealers; ++k) s += "  INPUT Sale" + num(k) + kSaleSchema + "\n";
  s += std::string("  OUTPUT SoldCar") + kSaleSchema + R"(
  QSTATE {
  }
  QOUT {
    SoldCar = UNION Sale1, Sale2, Sale3, Sale4;
  }

)";
  s += "WORKFLOW\n";
  s += "  NODE request : request\n  NODE and : and\n  NODE agg : agg\n  NODE choice : choice\n";
  s += "  NODE xor : xor\n  NODE car : car\n";
  for (std::size_t k = 1; k <= kDealers; ++k) {
    s += "  NODE dealer" + num(k) + " : dealer" + num(k) + "\n";
    s += "  NODE dealer" + num(k) + "_sale : dealer" + num(k) + "\n";
  }
  s += "  EDGE request -> and : NewRequests\n";
  for (std::size_t k = 1; k <= kDealers; ++k) {
    const std::string K = num(k);
    s += "  EDGE and -> dealer" + K + " : Requests,Purchase\n";
    s += "  EDGE dealer" + K + " -> agg : Bids" + K + "\n";
    s += "  EDGE xor -> dealer" + K + "_sale : Purchase,Requests\n";
    s += "  EDGE dealer" + K + "_sale -> car : Sale" + K + "\n";
  }
  s += "  EDGE agg -> xor : BestBid\n  EDGE choice -> xor : Choice\n";
  s += "  IN request choice\n  OUT car\n  UNTIL OUTPUT\n";
  return s;
}

// --- Arctic -------------------------------------------------------------------------------

const char* kParSchema = "(Year:int, Month:int, Season:int, Sel:text)";
const char* kObsSchema =
    "(Year:int, Month:int, Season:int, Scope:text, AirTemp:float, Pressure:float, "
    "Humidity:float, WindSpeed:float, Precip:float, SnowDepth:float)";
const char* kMinSchema = "(Scope:text, MinTemp:float)";

// Mean monthly air temperature of a high-latitude site, January first.
constexpr double kMonthlyMean[12] = {-30, -29, -26, -18, -7, 2, 6, 4, -2, -12, -22, -27};

double round1(double x) { return std::round(x * 10.0) / 10.0; }

struct StationWiring {
  std::size_t par_source = 0;  // 0 = the input node
  std::vector<std::size_t> upstream;
};

std::vector<StationWiring> wiring(const std::vector<std::vector<std::size_t>>& layers, std::size_t n) {
  std::vector<StationWiring> w(n + 1);
  for (std::size_t l = 1; l < layers.size(); ++l) {
    for (std::size_t k : layers[l]) {
      w[k].par_source = layers[l - 1].front();
      w[k].upstream = layers[l - 1];
    }
  }
  return w;
}

std::string station_module(std::size_t k, const StationWiring& w) {
  const std::string K = num(k);
  const std::string par = "Par" + num(w.par_source);
  std::string s = "MODULE sta" + K + "\n";
  s += "  INPUT " + par + kParSchema + "\n";
  for (std::size_t j : w.upstream) s += "  INPUT MinTemp" + num(j) + kMinSchema + "\n";
  s += std::string("  STATE Obs") + kObsSchema + "\n";
  s += "  OUTPUT Par" + K + kParSchema + "\n";
  s += "  OUTPUT MinTemp" + K + kMinSchema + "\n";
  s += "  QSTATE {\n  }\n  QOUT {\n";
  s += "    Par = FOREACH " + par + " GENERATE Year, Month, Season, Sel;\n";
  s += R"(    PYear = FILTER Par BY Sel == 'year';
    PMonth = FILTER Par BY Sel == 'month';
    PSeason = FILTER Par BY Sel == 'season';
    JY = JOIN Obs BY Year, PYear BY Year;
    JM = JOIN Obs BY Month, PMonth BY Month;
    JS = JOIN Obs BY Season, PSeason BY Season;
    JA = JOIN Obs BY Scope, Par BY Sel;
    TY = FOREACH JY GENERATE Scope, AirTemp;
    TM = FOREACH JM GENERATE Scope, AirTemp;
    TS = FOREACH JS GENERATE Scope, AirTemp;
    TA = FOREACH JA GENERATE Scope, AirTemp;
    Selected = UNION TY, TM, TS, TA;
    BySel = GROUP Selected BY Scope;
)";
  const std::string local = w.upstream.empty() ? "MinTemp" + K : "LocalMin";
  s += "    " + local + " = FOREACH BySel GENERATE group AS Scope, MIN(Selected.AirTemp) AS MinTemp;\n";
  if (!w.upstream.empty()) {
    s += "    Pool = UNION LocalMin";
    for (std::size_t j : w.upstream) s += ", MinTemp" + num(j);
    s += ";\n    ByScope = GROUP Pool BY Scope;\n";
    s += "    MinTemp" + K + " = FOREACH ByScope GENERATE group AS Scope, MIN(Pool.MinTemp) AS MinTemp;\n";
  }
  s += "    Par" + K + " = FOREACH Par GENERATE Year, Month, Season, Sel;\n";
  s += "  }\n\n";
  return s;
}

std::string arctic_text(const ArcticParams& p) {
  const auto layers = arctic_layers(p);
  const auto w = wiring(layers, p.num_stations);
  std::string s = std::string("MODULE in\n  INPUT Query") + kParSchema + "\n  OUTPUT Par0" +
                  kParSchema + R"(
  QSTATE {
  }
  QOUT {
    Par0 = FOREACH Query GENERATE Year, Month, Season, Sel;
  }

)";
  for (std::size_t k = 1; k <= p.num_stations; ++k) s += station_module(k, w[k]);
  const auto& last = layers.back();
  s += "MODULE out\n";
  for (std::size_t j : last) s += "  INPUT MinTemp" + num(j) + kMinSchema + "\n";
  s += std::string("  OUTPUT Result") + kMinSchema + "\n  QSTATE {\n  }\n  QOUT {\n";
  if (last.size() == 1) {
    s += "    Pool = FOREACH MinTemp" + num(last.front()) + " GENERATE Scope, MinTemp;\n";
  } else {
    s += "    Pool = UNION ";
    for (std::size_t i = 0; i < last.size(); ++i) s += (i ? ", MinTemp" : "MinTemp") + num(last[i]);
    s += ";\n";
  }
  s += R"(    ByScope = GROUP Pool BY Scope;
    Result = FOREACH ByScope GENERATE group AS Scope, MIN(Pool.MinTemp) AS MinTemp;
  }

)";
  s += "WORKFLOW\n  NODE in : in\n  NODE out : out\n";
  for (std::size_t k = 1; k <= p.num_stations; ++k) s += "  NODE sta" + num(k) + " : sta" + num(k) + "\n";
  for (std::size_t k : layers.front()) s += "  EDGE in -> sta" + num(k) + " : Par0\n";
  for (std::size_t k = 1; k <= p.num_stations; ++k) {
    for (std::size_t j : w[k].upstream) {
      s += "  EDGE sta" + num(j) + " -> sta" + num(k) + " : MinTemp" + num(j);
      if (j == w[k].par_source) s += ",Par" + num(j);
      s += "\n";
    }
  }
  for (std::size_t j : last) s += "  EDGE sta" + num(j) + " -> out : MinTemp" + num(j) + "\n";
  s += "  IN in\n  OUT out\n";
  return s;
}

Bag station_observations(std::uint64_t seed, std::size_t station) {
  std::mt19937_64 rng(seed * 1000003u + station);
  std::uniform_real_distribution<double> offset(-4.0, 4.0);
  std::uniform_real_distribution<double> noise(-6.0, 6.0);
  std::uniform_real_distribution<double> pressure(990.0, 1040.0);
  std::uniform_real_distribution<double> humidity(55.0, 95.0);
  std::uniform_real_distribution<double> wind(0.0, 15.0);
  std::uniform_real_distribution<double> precip(0.0, 60.0);
  const double site = offset(rng);
  Bag obs;
  for (int year = kFirstYear; year <= kLastYear; ++year) {
    for (int month = 1; month <= 12; ++month) {
      const double temp = round1(kMonthlyMean[month - 1] + site + noise(rng));
      const double snow = temp < 0 ? round1(-temp * 2.5) : 0.0;
      obs.tuples.push_back(tuple_of({std::int64_t{year}, std::int64_t{month},
                                     std::int64_t{season_of(month)}, std::string("all"), temp,
                                     round1(pressure(rng)), round1(humidity(rng)), round1(wind(rng)),
                                     round1(precip(rng)), snow}));
    }
  }
  return obs;
}

}  // namespace

// --- dealerships ------------------------------------------------------------------------------

const std::vector<std::string>& german_models() {
  static const std::vector<std::string> models = {
      "Audi A3",          "Audi A4",          "Audi A6",     "BMW 3 Series",
      "BMW 5 Series",     "BMW X5",           "Mercedes C-Class", "Mercedes E-Class",
      "Porsche 911",      "Volkswagen Golf",  "Volkswagen Passat", "Opel Astra"};
  return models;
}

std::int64_t base_price(const std::string& model) {
  auto it = price_table().find(model);
  if (it == price_table().end()) throw EvalError("no base price for model '" + model + "'");
  return it->second;
}

std::optional<std::int64_t> calc_bid_amount(const std::string& model, std::int64_t num_avail,
                                            std::int64_t num_sold,
                                            std::optional<std::int64_t> previous) {
  if (num_avail <= 0) return std::nullopt;
  const double factor = 1.0 + 0.02 * static_cast<double>(num_avail) - 0.05 * static_cast<double>(num_sold);
  std::int64_t amount = std::llround(static_cast<double>(base_price(model)) * factor);
  if (previous) amount = std::min(amount, *previous) - 1;
  return amount;
}

pig::BBRegistry dealership_black_boxes() {
  pig::BBRegistry r;
  r.add({"CalcBid", parse_schema_decl("CalcBid(BidId:text, UserId:text, Model:text, Amount:int)"),
         NodeKind::V, false, calc_bid});
  r.add({"PickCar", parse_schema_decl("PickCar(CarId:text, BidId:text, UserId:text, Model:text)"),
         NodeKind::P, true, pick_car});
  return r;
}

WorkflowDef dealership_workflow() { return parse_workflow(dealership_text()); }

GeneratedRun gen_dealerships(const DealershipParams& p) {
  if (p.num_cars % kDealers != 0) throw FormatError("numCars must be divisible by 4");
  if (p.num_exec < 1) throw FormatError("numExec must be at least 1");
  if (!(p.reserve_lo <= p.reserve_hi) || !(p.accept_lo <= p.accept_hi) || p.accept_lo < 0 ||
      p.accept_hi > 1)
    throw FormatError("invalid reserve or acceptance range");

  GeneratedRun run;
  run.def = dealership_workflow();
  std::mt19937_64 rng(p.seed);
  const auto& models = german_models();
  std::uniform_int_distribution<std::size_t> pick(0, models.size() - 1);

  const std::size_t per_dealer = p.num_cars / kDealers;
  std::size_t car = 0;
  for (std::size_t k = 1; k <= kDealers; ++k) {
    Bag cars;
    for (std::size_t i = 0; i < per_dealer; ++i) {
      cars.tuples.push_back(tuple_of({"C" + num(++car), models[pick(rng)]}));
    }
    auto& st = run.state["dealer" + num(k)];
    st["Cars"] = std::move(cars);
    st["SoldCars"] = Bag{};
    st["InventoryBids"] = Bag{};
  }

  const std::string user = "U1";
  const std::string model = models[pick(rng)];
  const double reserve_factor = std::uniform_real_distribution<double>(p.reserve_lo, p.reserve_hi)(rng);
  const double accept = p.accept_lo == p.accept_hi
                            ? p.accept_lo
                            : std::uniform_real_distribution<double>(p.accept_lo, p.accept_hi)(rng);
  const auto reserve = std::llround(static_cast<double>(base_price(model)) * reserve_factor);
  std::bernoulli_distribution rolls(accept);
  for (std::size_t e = 0; e < p.num_exec; ++e) {
    WorkflowInput in;
    in["request"]["BidRequest"].tuples.push_back(tuple_of({user, "B" + num(e + 1), model}));
    in["choice"]["UserChoice"].tuples.push_back(
        tuple_of({user, std::int64_t{reserve}, static_cast<bool>(rolls(rng))}));
    run.inputs.push_back(std::move(in));
  }
  return run;
}

// --- Arctic ---------------------------------------------------------------------------------

std::string to_string(Topology t) {
  switch (t) {
    case Topology::Parallel: return "parallel";
    case Topology::Serial: return "serial";
    case Topology::Dense: return "dense";
  }
  return "?";
}

std::string to_string(Selectivity s) {
  switch (s) {
    case Selectivity::All: return "all";
    case Selectivity::Season: return "season";
    case Selectivity::Month: return "month";
    case Selectivity::Year: return "year";
  }
  return "?";
}

Topology topology_from_string(const std::string& s) {
  if (s == "parallel") return Topology::Parallel;
  if (s == "serial") return Topology::Serial;
  if (s == "dense") return Topology::Dense;
  throw FormatError("unknown topology '" + s + "'");
}

Selectivity selectivity_from_string(const std::string& s) {
  if (s == "all") return Selectivity::All;
  if (s == "season") return Selectivity::Season;
  if (s == "month") return Selectivity::Month;
  if (s == "year") return Selectivity::Year;
  throw FormatError("unknown selectivity '" + s + "'");
}

std::vector<std::vector<std::size_t>> arctic_layers(const ArcticParams& p) {
  if (p.num_stations < 2 || p.num_stations > 24)
    throw FormatError("numStations must be between 2 and 24");
  std::vector<std::vector<std::size_t>> layers;
  switch (p.topology) {
    case Topology::Parallel:
      layers.emplace_back();
      for (std::size_t k = 1; k <= p.num_stations; ++k) layers.back().push_back(k);
      break;
    case Topology::Serial:
      for (std::size_t k = 1; k <= p.num_stations; ++k) layers.push_back({k});
      break;
    case Topology::Dense:
      if (p.fanout == 0 || p.num_stations % p.fanout != 0)
        throw FormatError("dense topology needs a fanout dividing numStations");
      for (std::size_t k = 1; k <= p.num_stations; ++k) {
        if ((k - 1) % p.fanout == 0) layers.emplace_back();
        layers.back().push_back(k);
      }
      break;
  }
  return layers;
}

WorkflowDef arctic_workflow(const ArcticParams& p) { return parse_workflow(arctic_text(p)); }

std::pair<int, int> arctic_query_date(std::size_t exec) {
  const std::size_t m = exec % ((kLastYear - kFirstYear + 1) * 12);
  return {kFirstYear + static_cast<int>(m / 12), static_cast<int>(m % 12) + 1};
}

GeneratedRun gen_arctic(const ArcticParams& p) {
  if (p.num_exec < 1) throw FormatError("numExec must be at least 1");
  GeneratedRun run;
  run.def = arctic_workflow(p);
  for (std::size_t k = 1; k <= p.num_stations; ++k) {
    run.state["sta" + num(k)]["Obs"] = station_observations(p.seed, k);
  }
  const std::string sel = to_string(p.selectivity);
  for (std::size_t e = 0; e < p.num_exec; ++e) {
    auto [year, month] = arctic_query_date(e);
    WorkflowInput in;
    in["in"]["Query"].tuples.push_back(
        tuple_of({std::int64_t{year}, std::int64_t{month}, std::int64_t{season_of(month)}, sel}));
    run.inputs.push_back(std::move(in));
  }
  return run;
}

// --- benchmark --------------------------------------------------------------------------------

BenchmarkSpec dealership_benchmark(const DealershipParams& p) {
  BenchmarkSpec s;
  s.family = "dealerships";
  s.topology = "fixed";
  s.modules = 10;
  s.num_cars = p.num_cars;
  s.num_exec = p.num_exec;
  s.run = gen_dealerships(p);
  s.bbs = dealership_black_boxes();
  return s;
}

BenchmarkSpec arctic_benchmark(const ArcticParams& p) {
  BenchmarkSpec s;
  s.family = "arctic";
  s.topology = to_string(p.topology);
  s.modules = p.num_stations;
  s.fanout = p.topology == Topology::Dense ? p.fanout : 0;
  s.selectivity = to_string(p.selectivity);
  s.num_exec = p.num_exec;
  s.run = gen_arctic(p);
  return s;
}

std::vector<double> output_dependency_fractions(const WorkflowRunner& runner) {
  const ProvGraph& g = runner.graph();
  std::set<NodeId> state_tokens;
  for (const auto& [id, origin] : runner.log().tokens) {
    if (origin.state) state_tokens.insert(origin.node);
  }
  std::vector<double> out;
  if (state_tokens.empty()) return out;
  for (const auto& exec : runner.log().executions) {
    for (const auto& [node, env] : exec.outputs) {
      for (const auto& [rel, r] : env) {
        for (const auto& t : r->bag.tuples) {
          if (t.ann.pnode == kNoNode) continue;
          std::size_t hits = 0;
          for (NodeId tok : dependency_set(g, t.ann.pnode)) hits += state_tokens.count(tok);
          out.push_back(static_cast<double>(hits) / static_cast<double>(state_tokens.size()));
        }
      }
    }
  }
  return out;
}

BenchmarkReport run_benchmark(const BenchmarkSpec& spec, std::size_t repetitions) {
  using clock = std::chrono::steady_clock;
  auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };
  BenchmarkReport report;
  for (std::size_t rep = 1; rep <= repetitions; ++rep) {
    for (bool prov : {false, true}) {
      BenchmarkRow row;
      row.family = spec.family;
      row.topology = spec.topology;
      row.modules = spec.modules;
      row.fanout = spec.fanout;
      row.selectivity = spec.selectivity;
      row.num_cars = spec.num_cars;
      row.num_exec = spec.num_exec;
      row.repetition = rep;
      row.prov = prov;

      RunOptions opts;
      opts.provenance = prov;
      WorkflowRunner runner(spec.run.def, spec.bbs, opts);
      const auto start = clock::now();
      runner.load_state(spec.run.state);
      runner.execute_sequence(spec.run.inputs);
      row.exec_time_ms = ms(clock::now() - start);
      row.graph_nodes = runner.graph().node_count();
      row.graph_edges = runner.graph().edge_count();
      if (prov) {
        const std::string text = serialize(runner.graph());
        const auto b = clock::now();
        ProvGraph rebuilt = deserialize(text);
        row.build_time_ms = ms(clock::now() - b);
        row.graph_nodes = rebuilt.node_count();
        auto fr = output_dependency_fractions(runner);
        double sum = 0;
        for (double f : fr) sum += f;
        row.mean_dependency_fraction = fr.empty() ? 0.0 : sum / static_cast<double>(fr.size());
      }
      report.rows.push_back(row);
    }
  }
  return report;
}

std::vector<BenchmarkRow> BenchmarkReport::means() const {
  std::vector<BenchmarkRow> out;
  for (bool prov : {false, true}) {
    BenchmarkRow acc;
    std::size_t n = 0;
    for (const auto& r : rows) {
      if (r.prov != prov) continue;
      if (n++ == 0) {
        acc = r;
        acc.repetition = 0;
        continue;
      }
      acc.exec_time_ms += r.exec_time_ms;
      acc.build_time_ms += r.build_time_ms;
      acc.mean_dependency_fraction += r.mean_dependency_fraction;
    }
    if (n == 0) continue;
    acc.exec_time_ms /= static_cast<double>(n);
    acc.build_time_ms /= static_cast<double>(n);
    acc.mean_dependency_fraction /= static_cast<double>(n);
    out.push_back(acc);
  }
  return out;
}

void write_csv_header(std::ostream& out) {
  out << "family,topology,modules,fanout,selectivity,numCars,numExec,repetition,prov,exec_time_ms,"
         "graph_nodes,graph_edges,build_time_ms,mean_dependency_fraction\n";
}

void write_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
  for (const auto& r : rows) {
    out << r.family << ',' << r.topology << ',' << r.modules << ',' << r.fanout << ','
        << r.selectivity << ',' << r.num_cars << ',' << r.num_exec << ',' << r.repetition << ','
        << (r.prov ? "on" : "off") << ',' << r.exec_time_ms << ',' << r.graph_nodes << ','
        << r.graph_edges << ',' << r.build_time_ms << ',' << r.mean_dependency_fraction << '\n';
  }
}

}  // namespace lipstick::gen
