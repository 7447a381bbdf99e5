#include "rmab/model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "rmab/errors.hpp"

namespace rmab {

using nlohmann::json;

namespace {

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw InvalidModel(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw InvalidModel(where + ": NaN and infinite values are not allowed");
  return d;
}

const json& member(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw InvalidModel(where + ": missing key '" + key + "'");
  return obj.at(key);
}

std::vector<double> vector_of(const json& v, std::size_t n, const std::string& where) {
  if (!v.is_array() || v.size() != n)
    throw InvalidModel(where + ": expected an array of " + std::to_string(n) + " numbers");
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(number(v[i], where));
  return out;
}

RateMatrix matrix_of(const json& v, int n, const std::string& where) {
  if (!v.is_array() || v.size() != static_cast<std::size_t>(n))
    throw InvalidModel(where + ": expected " + std::to_string(n) + " rows");
  RateMatrix m(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> row = vector_of(v[i], static_cast<std::size_t>(n) + 1,
                                        where + " row " + std::to_string(i + 1));
    for (int col = 0; col <= n; ++col)
      if (col != i + 1) m.at(i, col) = row[col];  // diagonal ignored
  }
  return m;
}

json matrix_json(const RateMatrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.num_states(); ++i) {
    json row = json::array();
    for (int col = 0; col <= m.num_states(); ++col) row.push_back(col == i + 1 ? 0.0 : m.at(i, col));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

ModelInstance model_from_json(const json& doc) {
  if (!doc.is_object()) throw InvalidModel("model document must be a JSON object");
  ModelInstance m;
  m.alpha = number(member(doc, "alpha", "model"), "alpha");

  const json& classes = member(doc, "classes", "model");
  if (!classes.is_array()) throw InvalidModel("classes: expected an array");
  for (std::size_t k = 0; k < classes.size(); ++k) {
    const json& c = classes[k];
    const std::string where = "class " + std::to_string(k + 1);
    const json& dist = member(c, "entry_dist", where);
    if (!dist.is_array() || dist.empty())
      throw InvalidModel(where + ": entry_dist must be a non-empty array");
    const int J = static_cast<int>(dist.size());
    BanditClass b = BanditClass::zeros(J);
    b.arrival_rate = number(member(c, "arrival_rate", where), where + " arrival_rate");
    b.entry_dist = vector_of(dist, J, where + " entry_dist");
    b.gen_passive = matrix_of(member(c, "gen_passive", where), J, where + " gen_passive");
    b.gen_active = matrix_of(member(c, "gen_active", where), J, where + " gen_active");
    b.cost_passive = vector_of(member(c, "cost_passive", where), J, where + " cost_passive");
    b.cost_active = vector_of(member(c, "cost_active", where), J, where + " cost_active");
    m.classes.push_back(std::move(b));
  }

  const json& pop = member(doc, "population", "model");
  if (pop.is_string() && pop.get<std::string>() == "dynamic") {
    m.population = DynamicPopulation{};
  } else if (pop.is_object() && pop.contains("fixed")) {
    const json& counts = member(pop.at("fixed"), "counts", "population.fixed");
    if (!counts.is_array() || counts.size() != m.classes.size())
      throw InvalidModel("population.fixed.counts: expected one array per class");
    FixedPopulation f;
    for (std::size_t k = 0; k < counts.size(); ++k)
      f.counts.push_back(vector_of(counts[k], static_cast<std::size_t>(m.classes[k].num_states),
                                   "population.fixed.counts[" + std::to_string(k + 1) + "]"));
    m.population = std::move(f);
  } else {
    throw InvalidModel("population must be \"dynamic\" or {\"fixed\": {\"counts\": ...}}");
  }
  return m;
}

json model_to_json(const ModelInstance& model) {
  json doc;
  doc["alpha"] = model.alpha;
  if (const FixedPopulation* f = model.fixed())
    doc["population"] = {{"fixed", {{"counts", f->counts}}}};
  else
    doc["population"] = "dynamic";
  json classes = json::array();
  for (const BanditClass& c : model.classes) {
    classes.push_back({{"arrival_rate", c.arrival_rate},
                       {"entry_dist", c.entry_dist},
                       {"gen_passive", matrix_json(c.gen_passive)},
                       {"gen_active", matrix_json(c.gen_active)},
                       {"cost_passive", c.cost_passive},
                       {"cost_active", c.cost_active}});
  }
  doc["classes"] = classes;
  return doc;
}

ModelInstance load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidModel("cannot open model file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidModel("model file " + path.string() + " is not valid JSON: " + e.what());
  }
  return model_from_json(doc);
}

void save_model(const ModelInstance& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidModel("cannot write model file " + path.string());
  out << model_to_json(model).dump(2) << '\n';
}

}  // namespace rmab
