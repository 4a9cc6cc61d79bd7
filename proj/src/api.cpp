#include "milt/api.hpp"

#include <httplib.h>

#include <map>
#include <mutex>
#include <random>
#include <shared_mutex>

#include "json.hpp"
#include "milt/error.hpp"
#include "milt/miltree.hpp"
#include "milt/session.hpp"

namespace milt {

using nlohmann::json;

namespace {

struct SessionEntry {
  std::shared_mutex mutex;
  std::unique_ptr<Session> session;
};

int status_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::Parse: return 400;
    case ErrorKind::NotFound: return 404;
    case ErrorKind::State: return 409;
    case ErrorKind::Io: return 500;
  }
  return 500;
}

void send(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send(res, {{"error", message}, {"code", status}}, status);
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidArgument, std::string("request body is not JSON: ") + e.what());
  }
}

std::string param(const httplib::Request& req, const std::string& key, const std::string& fallback) {
  return req.has_param(key) ? req.get_param_value(key) : fallback;
}

std::vector<std::size_t> bag_indices(const MilDataset& ds, const json& ids) {
  if (!ids.is_array()) fail(ErrorKind::InvalidArgument, "bag_ids must be an array");
  std::vector<std::size_t> out;
  for (const auto& id : ids) out.push_back(ds.bag_index(id.get<std::string>()));
  return out;
}

std::vector<std::string> bag_ids(const MilDataset& ds, const std::vector<std::size_t>& bags) {
  std::vector<std::string> out;
  for (const auto b : bags) out.push_back(ds.bags[b].id);
  return out;
}

SvmConfig svm_from_request(const json& body) {
  if (body.contains("svm")) return svm_config_from_json(body["svm"]);
  SvmConfig cfg;
  cfg.variant = SvmVariant::Nu;
  json flat = json::object();
  for (const char* key : {"variant", "c", "nu", "tolerance", "scale"}) {
    if (body.contains(key)) flat[key] = body[key];
  }
  if (!flat.contains("variant")) flat["variant"] = to_string(cfg.variant);
  return svm_config_from_json(flat);
}

}  // namespace

struct ApiServer::Impl {
  std::filesystem::path data_dir;
  httplib::Server http;
  int bound_port = -1;

  std::mutex data_mutex;
  std::map<std::string, std::shared_ptr<const MilDataset>> datasets;
  std::map<std::pair<std::string, SelectionMethod>, std::shared_ptr<const MilTree>> trees;

  std::shared_mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<SessionEntry>> sessions;
  std::mt19937_64 token_rng{std::random_device{}()};

  std::shared_ptr<const MilDataset> dataset(const std::string& name) {
    std::lock_guard lock(data_mutex);
    if (auto it = datasets.find(name); it != datasets.end()) return it->second;
    const auto path = data_dir / (name + ".csv");
    if (name.find('/') != std::string::npos || !std::filesystem::is_regular_file(path)) {
      fail(ErrorKind::NotFound, "unknown dataset '" + name + "'");
    }
    auto ds = std::make_shared<const MilDataset>(load_csv(path));
    datasets.emplace(name, ds);
    return ds;
  }

  std::shared_ptr<const MilTree> tree(const std::string& name, SelectionMethod method) {
    auto ds = dataset(name);
    {
      std::lock_guard lock(data_mutex);
      if (auto it = trees.find({name, method}); it != trees.end()) return it->second;
    }
    auto built = build_miltree(ds, method);
    std::lock_guard lock(data_mutex);
    return trees.emplace(std::pair{name, method}, std::move(built)).first->second;
  }

  std::shared_ptr<SessionEntry> entry(const std::string& sid) {
    std::shared_lock lock(sessions_mutex);
    auto it = sessions.find(sid);
    if (it == sessions.end()) fail(ErrorKind::NotFound, "unknown session '" + sid + "'");
    return it->second;
  }

  std::string add_session(std::unique_ptr<Session> s) {
    auto e = std::make_shared<SessionEntry>();
    e->session = std::move(s);
    std::unique_lock lock(sessions_mutex);
    std::string sid;
    do {
      char buf[17];
      std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(token_rng()));
      sid = buf;
    } while (sessions.count(sid));
    sessions.emplace(sid, std::move(e));
    return sid;
  }

  json summary(const std::string& sid, const Session& s) {
    const auto& ds = s.dataset();
    return {{"session_id", sid},
            {"dataset", ds.name},
            {"method", to_string(s.tree().method())},
            {"svm", to_json(s.svm_config())},
            {"training", bag_ids(ds, s.training())},
            {"training_rows", s.training_rows().size()},
            {"trained", s.model().has_value()},
            {"history_length", s.history().size()}};
  }

  // Runs a handler, mapping library errors to {error, code}.
  template <class F>
  httplib::Server::Handler wrap(F f) {
    return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send_error(res, status_for(e.kind()), e.what());
      } catch (const json::exception& e) {
        send_error(res, 400, e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      }
    };
  }

  template <class F>
  auto read(const httplib::Request& req, F f) {
    auto e = entry(req.matches[1]);
    std::shared_lock lock(e->mutex);
    return f(*e->session);
  }

  template <class F>
  auto write(const httplib::Request& req, F f) {
    auto e = entry(req.matches[1]);
    std::unique_lock lock(e->mutex);
    return f(*e->session);
  }

  void routes();
};

void ApiServer::Impl::routes() {
  http.Get("/datasets", wrap([this](const httplib::Request&, httplib::Response& res) {
    std::vector<std::string> names;
    for (const auto& f : std::filesystem::directory_iterator(data_dir)) {
      if (f.is_regular_file() && f.path().extension() == ".csv") names.push_back(f.path().stem().string());
    }
    std::sort(names.begin(), names.end());
    json out = json::array();
    for (const auto& n : names) {
      const auto ds = dataset(n);
      out.push_back({{"name", n}, {"bags", ds->bags.size()}, {"classes", ds->num_classes()}});
    }
    send(res, out);
  }));

  http.Get(R"(/datasets/([^/]+)/tree)", wrap([this](const httplib::Request& req, httplib::Response& res) {
    const auto t = tree(req.matches[1], parse_selection_method(param(req, "method", "med")));
    send(res, bag_tree_json(*t, t->initial_slots(), t->classify_positions()));
  }));

  http.Get(R"(/datasets/([^/]+)/bags/([^/]+)/tree)",
           wrap([this](const httplib::Request& req, httplib::Response& res) {
             const auto t = tree(req.matches[1], parse_selection_method(param(req, "method", "med")));
             const auto bag = t->dataset().bag_index(std::string(req.matches[2]));
             send(res, instance_tree_json(*t, bag, t->initial_slots()[bag]));
           }));

  http.Post("/sessions", wrap([this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    if (!body.contains("dataset")) fail(ErrorKind::InvalidArgument, "missing 'dataset'");
    const auto t = tree(body["dataset"].get<std::string>(),
                        parse_selection_method(body.value("method", std::string("med"))));
    auto s = std::make_unique<Session>(t, svm_from_request(body));
    const auto view = summary("", *s);
    const auto sid = add_session(std::move(s));
    auto out = view;
    out["session_id"] = sid;
    send(res, out, 201);
  }));

  http.Post("/sessions/import", wrap([this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    const auto t = tree(body.at("dataset").at("name").get<std::string>(),
                        parse_selection_method(body.at("method").get<std::string>()));
    auto s = std::make_unique<Session>(Session::from_json(body, t));
    const auto view = summary("", *s);
    auto out = view;
    out["session_id"] = add_session(std::move(s));
    send(res, out, 201);
  }));

  http.Get(R"(/sessions/([^/]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
    send(res, read(req, [&](const Session& s) { return summary(req.matches[1], s); }));
  }));

  http.Delete(R"(/sessions/([^/]+))", wrap([this](const httplib::Request& req, httplib::Response& res) {
    std::unique_lock lock(sessions_mutex);
    if (!sessions.erase(req.matches[1])) fail(ErrorKind::NotFound, "unknown session");
    send(res, {{"deleted", std::string(req.matches[1])}});
  }));

  http.Put(R"(/sessions/([^/]+)/training)", wrap([this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    send(res, write(req, [&](Session& s) {
           s.set_training(bag_indices(s.dataset(), body.at("bag_ids")));
           return summary(req.matches[1], s);
         }));
  }));

  http.Post(R"(/sessions/([^/]+)/train)", wrap([this](const httplib::Request& req, httplib::Response& res) {
    send(res, write(req, [&](Session& s) { return to_json(s.train(), s.dataset()); }));
  }));

  http.Post(R"(/sessions/([^/]+)/actions)", wrap([this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    const auto kind = parse_action_kind(body.at("kind").get<std::string>());
    send(res, write(req, [&](Session& s) {
           const auto bags = bag_indices(s.dataset(), body.at("bag_ids"));
           std::optional<std::size_t> instance;
           if (body.contains("instance")) instance = body["instance"].get<std::size_t>();
           switch (kind) {
             case ActionKind::SwapToAlternative: s.swap_to_alternative(bags); break;
             case ActionKind::SetPrototype:
               if (bags.size() != 1 || !instance) {
                 fail(ErrorKind::InvalidArgument, "set_prototype needs one bag and an instance");
               }
               s.set_prototype(bags.front(), *instance);
               break;
             case ActionKind::AddPrototype:
               if (instance && bags.size() != 1) {
                 fail(ErrorKind::InvalidArgument, "an explicit instance needs exactly one bag");
               }
               for (const auto b : bags) s.add_prototype(b, instance);
               break;
             case ActionKind::AddBags: s.add_bags(bags); break;
             case ActionKind::SetTraining: s.set_training(bags); break;
           }
           return summary(req.matches[1], s);
         }));
  }));

  http.Get(R"(/sessions/([^/]+)/classmatch)", wrap([this](const httplib::Request& req, httplib::Response& res) {
    const auto scope = parse_scope(param(req, "scope", "all"));
    send(res, read(req, [&](const Session& s) { return to_json(s.classmatch(scope), s.dataset()); }));
  }));

  http.Get(R"(/sessions/([^/]+)/error-branches)",
           wrap([this](const httplib::Request& req, httplib::Response& res) {
             send(res, read(req, [&](const Session& s) {
                    json out = json::array();
                    for (const auto& b : s.error_branches(s.classmatch(Scope::All))) {
                      out.push_back(to_json(b, s.dataset()));
                    }
                    return out;
                  }));
           }));

  http.Get(R"(/sessions/([^/]+)/suggest)", wrap([this](const httplib::Request& req, httplib::Response& res) {
    const double fraction = std::stod(param(req, "fraction", "0.3"));
    const auto mode = parse_training_mode(param(req, "mode", "combined"));
    const auto seed = std::stoull(param(req, "seed", "1"));
    send(res, read(req, [&](const Session& s) {
           const auto picked = suggest_training(s.dataset(), s.tree().classify_positions(), fraction, seed, mode);
           return json{{"bag_ids", bag_ids(s.dataset(), picked)}};
         }));
  }));

  http.Get(R"(/sessions/([^/]+)/tree)", wrap([this](const httplib::Request& req, httplib::Response& res) {
    send(res, read(req, [&](const Session& s) {
           return bag_tree_json(s.tree(), s.slots(), s.tree().classify_positions());
         }));
  }));

  http.Get(R"(/sessions/([^/]+)/bags/([^/]+)/tree)",
           wrap([this](const httplib::Request& req, httplib::Response& res) {
             send(res, read(req, [&](const Session& s) {
                    const auto bag = s.dataset().bag_index(std::string(req.matches[2]));
                    return instance_tree_json(s.tree(), bag, s.slots()[bag]);
                  }));
           }));

  http.Get(R"(/sessions/([^/]+)/export)", wrap([this](const httplib::Request& req, httplib::Response& res) {
    send(res, read(req, [](const Session& s) { return s.to_json(); }));
  }));

  http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send_error(res, res.status, "no such endpoint");
  });
}

ApiServer::ApiServer(std::filesystem::path data_dir) : impl_(std::make_unique<Impl>()) {
  if (!std::filesystem::is_directory(data_dir)) {
    fail(ErrorKind::Io, "data directory '" + data_dir.string() + "' does not exist");
  }
  impl_->data_dir = std::move(data_dir);
  impl_->routes();
}

ApiServer::~ApiServer() { stop(); }

void ApiServer::bind(const std::string& host, int port) {
  if (port == 0) {
    impl_->bound_port = impl_->http.bind_to_any_port(host);
  } else {
    impl_->bound_port = impl_->http.bind_to_port(host, port) ? port : -1;
  }
  if (impl_->bound_port < 0) fail(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
}

void ApiServer::run() {
  if (impl_->bound_port < 0) fail(ErrorKind::State, "server is not bound");
  impl_->http.listen_after_bind();
}

void ApiServer::stop() {
  if (impl_ && impl_->http.is_running()) impl_->http.stop();
}

int ApiServer::port() const { return impl_->bound_port; }

}  // namespace milt
