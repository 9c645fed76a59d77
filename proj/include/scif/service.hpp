#pragma once

#include <chrono>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "scif/codec.hpp"
#include "scif/edit.hpp"
#include "scif/edit_script.hpp"
#include "scif/features.hpp"
#include "scif/image_io.hpp"
#include "scif/metrics.hpp"
#include "scif/reconstruct.hpp"

namespace scif {

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

inline constexpr std::size_t kMaxUploadBytes = 32u << 20;
inline constexpr std::size_t kMaxHistory = 64;

/// One editing session: the uploaded source, its current representation and
/// an undo stack of earlier representations.
struct Session {
  std::string id;
  RasterImage source;
  EncodeConfig config;
  SparseRepresentation current;
  std::deque<SparseRepresentation> history;  // most recent last
  std::int64_t created = 0, modified = 0;    // unix seconds

  // Writers (edit, undo) take `lock` exclusively; readers share it.
  mutable std::shared_mutex lock;
  // Reconstruction cache, valid until the next mutation.
  mutable std::mutex cache_lock;
  mutable std::optional<ReconstructionResult> cached;
  mutable std::map<std::string, std::string> cached_bytes;
};

namespace detail {

inline std::int64_t unix_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

inline HttpResponse json_response(int status, const nlohmann::json& body) {
  return HttpResponse{status, "application/json", body.dump()};
}

inline HttpResponse error_response(int status, const std::string& message) {
  return json_response(status, {{"error", message}});
}

inline nlohmann::json contour_summary(const SparseRepresentation& r, bool full) {
  nlohmann::json contours = nlohmann::json::array();
  for (const auto& c : r.contours.contours) {
    int x0 = c.points.front().x, x1 = x0, y0 = c.points.front().y, y1 = y0;
    for (const auto& p : c.points) {
      x0 = std::min<int>(x0, p.x);
      x1 = std::max<int>(x1, p.x);
      y0 = std::min<int>(y0, p.y);
      y1 = std::max<int>(y1, p.y);
    }
    nlohmann::json j{{"id", c.id}, {"length", c.size()}, {"bbox", {x0, y0, x1, y1}}};
    if (full) {
      nlohmann::json pts = nlohmann::json::array(), normals = nlohmann::json::array();
      for (const auto& p : c.points) pts.push_back({p.x, p.y});
      for (const auto& n : c.normals) normals.push_back({n.x, n.y});
      j["points"] = std::move(pts);
      j["normals"] = std::move(normals);
      j["features"] = c.features;
    }
    contours.push_back(std::move(j));
  }
  return nlohmann::json{{"width", r.width},          {"height", r.height},
                        {"channels", r.channels},    {"kind", to_string(r.kind)},
                        {"dc_anchor", r.dc_anchor},  {"sparsity", sparsity(r)},
                        {"contours", std::move(contours)}};
}

inline nlohmann::json config_json(const EncodeConfig& c) {
  return {{"sparsity", c.target_sparsity}, {"kind", to_string(c.kind)}, {"min_length", c.min_contour_length},
          {"sigma", c.presmooth_sigma},    {"offset", c.sample_offset}};
}

}  // namespace detail

/// Backend of the browser editor. Every handler is callable directly (tests
/// use that); `mount` binds them to HTTP routes.
class SessionService {
 public:
  explicit SessionService(std::filesystem::path session_dir = {}, SolverConfig solver = {})
      : dir_(std::move(session_dir)), solver_(std::move(solver)) {
    if (!dir_.empty()) {
      std::filesystem::create_directories(dir_);
      recover();
    }
  }

  /// `params` may carry sparsity, kind, min_length, sigma, offset.
  HttpResponse create_session(std::string_view body, const std::map<std::string, std::string>& params = {}) {
    if (body.empty()) return detail::error_response(400, "empty image body");
    if (body.size() > kMaxUploadBytes) return detail::error_response(413, "image larger than 32 MiB");
    EncodeConfig config;
    try {
      for (const auto& [key, value] : params) {
        if (key == "sparsity") config.target_sparsity = std::stod(value);
        else if (key == "kind") config.kind = parse_feature_kind(value);
        else if (key == "min_length") config.min_contour_length = std::stoul(value);
        else if (key == "sigma") config.presmooth_sigma = std::stod(value);
        else if (key == "offset") config.sample_offset = std::stod(value);
      }
      config.validate();
      if (config.min_contour_length < 2) throw InvalidArgument("min_length must be >= 2");
    } catch (const std::exception& e) {
      return detail::error_response(400, std::string("bad encode parameter: ") + e.what());
    }

    auto session = std::make_shared<Session>();
    EncodeDiagnostics diag;
    try {
      const auto* data = reinterpret_cast<const std::uint8_t*>(body.data());
      session->source = decode_image(std::span<const std::uint8_t>(data, body.size()));
      auto encoded = encode_detailed(session->source, config);
      session->current = std::move(encoded.representation);
      diag = encoded.diagnostics;
    } catch (const Error& e) {
      return detail::error_response(400, e.what());
    }
    session->config = config;
    session->created = session->modified = detail::unix_now();
    {
      std::unique_lock store(store_lock_);
      do session->id = new_id();
      while (sessions_.count(session->id));
      sessions_[session->id] = session;
    }
    persist(*session);
    auto summary = detail::contour_summary(session->current, false);
    summary["id"] = session->id;
    summary["achieved_sparsity"] = sparsity(session->current);
    summary["nms_sparsity"] = diag.nms_sparsity;
    summary["ceiling_hit"] = diag.ceiling_hit;
    return detail::json_response(201, summary);
  }

  HttpResponse get_contours(const std::string& id, bool full) const {
    auto s = find(id);
    if (!s) return not_found(id);
    std::shared_lock guard(s->lock);
    auto summary = detail::contour_summary(s->current, full);
    summary["id"] = s->id;
    summary["history"] = s->history.size();
    return detail::json_response(200, summary);
  }

  /// Body: JSON array edit script. Paste `src` names another session.
  HttpResponse apply_edits(const std::string& id, std::string_view body) {
    auto s = find(id);
    if (!s) return not_found(id);
    EditScript script;
    try {
      // Paste sources are snapshotted before the target lock is taken, so
      // two sessions pasting from each other cannot deadlock.
      script = parse_edit_script_json(nlohmann::json::parse(body), [this](const std::string& src) {
        auto other = find(src);
        if (!other) return std::shared_ptr<const SparseRepresentation>();
        std::shared_lock g(other->lock);
        return std::make_shared<const SparseRepresentation>(other->current);
      });
    } catch (const nlohmann::json::exception& e) {
      return detail::json_response(422, {{"error", std::string("malformed JSON: ") + e.what()}, {"op_index", 0}});
    } catch (const EditError& e) {
      return detail::json_response(422, {{"error", e.what()}, {"op_index", e.op_index()}});
    }

    std::unique_lock guard(s->lock);
    if (!script.empty()) {
      SparseRepresentation next;
      try {
        next = apply_edit(s->current, script, EditOptions{s->config.min_contour_length});
      } catch (const EditError& e) {
        return detail::json_response(422, {{"error", e.what()}, {"op_index", e.op_index()}});
      } catch (const Error& e) {
        return detail::json_response(422, {{"error", e.what()}, {"op_index", 0}});
      }
      s->history.push_back(std::move(s->current));
      if (s->history.size() > kMaxHistory) s->history.pop_front();
      s->current = std::move(next);
      s->modified = detail::unix_now();
      invalidate(*s);
      persist(*s);
    }
    auto summary = detail::contour_summary(s->current, false);
    summary["id"] = s->id;
    return detail::json_response(200, summary);
  }

  HttpResponse undo(const std::string& id) {
    auto s = find(id);
    if (!s) return not_found(id);
    std::unique_lock guard(s->lock);
    if (s->history.empty()) return detail::error_response(409, "nothing to undo");
    s->current = std::move(s->history.back());
    s->history.pop_back();
    s->modified = detail::unix_now();
    invalidate(*s);
    persist(*s);
    auto summary = detail::contour_summary(s->current, false);
    summary["id"] = s->id;
    return detail::json_response(200, summary);
  }

  /// format: "png" or "ppm" (PGM bytes for single-channel sessions).
  HttpResponse get_reconstruction(const std::string& id, const std::string& format) const {
    if (format != "png" && format != "ppm") return detail::error_response(400, "format must be png or ppm");
    auto s = find(id);
    if (!s) return not_found(id);
    std::shared_lock guard(s->lock);
    std::lock_guard cache(s->cache_lock);
    const std::string content_type =
        format == "png" ? "image/png" : (s->current.channels == 3 ? "image/x-portable-pixmap" : "image/x-portable-graymap");
    if (auto it = s->cached_bytes.find(format); it != s->cached_bytes.end()) return HttpResponse{200, content_type, it->second};
    if (auto failure = ensure_reconstruction(*s)) return *failure;
    const auto bytes = encode_image(s->cached->image, format == "png" ? RasterFormat::kPng : RasterFormat::kPnm);
    auto& slot = s->cached_bytes[format];
    slot.assign(bytes.begin(), bytes.end());
    return HttpResponse{200, content_type, slot};
  }

  HttpResponse get_metrics(const std::string& id) const {
    auto s = find(id);
    if (!s) return not_found(id);
    std::shared_lock guard(s->lock);
    std::lock_guard cache(s->cache_lock);
    if (auto failure = ensure_reconstruction(*s)) return *failure;
    const double p = psnr(s->source, s->cached->image);
    nlohmann::json body{{"psnr", std::isinf(p) ? nlohmann::json(nullptr) : nlohmann::json(p)},
                        {"psnr_infinite", std::isinf(p)},
                        {"sparsity", sparsity(s->current)}};
    if (s->source.width() >= kSsimWindow && s->source.height() >= kSsimWindow)
      body["ssim"] = ssim(s->source, s->cached->image);
    else
      body["ssim"] = nullptr;
    nlohmann::json iterations = nlohmann::json::array();
    for (const auto& st : s->cached->stats) iterations.push_back(st.iterations);
    body["iterations"] = iterations;
    return detail::json_response(200, body);
  }

  HttpResponse export_scif(const std::string& id) const {
    auto s = find(id);
    if (!s) return not_found(id);
    std::shared_lock guard(s->lock);
    const auto bytes = serialize(s->current);
    return HttpResponse{200, "application/octet-stream", std::string(bytes.begin(), bytes.end())};
  }

  std::size_t session_count() const {
    std::shared_lock g(store_lock_);
    return sessions_.size();
  }

  std::shared_ptr<const Session> session(const std::string& id) const { return find(id); }

  /// Routes under /sessions, CORS headers, and static files under /ui/ when
  /// `ui_dir` is given.
  void mount(httplib::Server& server, const std::filesystem::path& ui_dir = {}) {
    server.set_payload_max_length(2 * kMaxUploadBytes);
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    const auto send = [](httplib::Response& res, const HttpResponse& r) {
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    };
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.Post("/sessions", [this, send](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> params;
      for (const auto& [k, v] : req.params) params[k] = v;
      send(res, create_session(req.body, params));
    });
    server.Get(R"(/sessions/([0-9a-f]+)/contours)", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, get_contours(req.matches[1], req.get_param_value("full") == "1"));
    });
    server.Post(R"(/sessions/([0-9a-f]+)/edits)", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, apply_edits(req.matches[1], req.body));
    });
    server.Post(R"(/sessions/([0-9a-f]+)/undo)", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, undo(req.matches[1]));
    });
    server.Get(R"(/sessions/([0-9a-f]+)/reconstruction)", [this, send](const httplib::Request& req, httplib::Response& res) {
      const auto format = req.has_param("format") ? req.get_param_value("format") : std::string("png");
      send(res, get_reconstruction(req.matches[1], format));
    });
    server.Get(R"(/sessions/([0-9a-f]+)/metrics)", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, get_metrics(req.matches[1]));
    });
    server.Get(R"(/sessions/([0-9a-f]+)/export)", [this, send](const httplib::Request& req, httplib::Response& res) {
      send(res, export_scif(req.matches[1]));
    });
    if (!ui_dir.empty()) server.set_mount_point("/ui", ui_dir.string());
  }

 private:
  std::shared_ptr<Session> find(const std::string& id) const {
    std::shared_lock g(store_lock_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  static HttpResponse not_found(const std::string& id) { return detail::error_response(404, "no session " + id); }

  std::string new_id() {
    std::lock_guard g(rng_lock_);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string id(16, '0');
    for (auto& ch : id) ch = kHex[rng_() & 15u];
    return id;
  }

  static void invalidate(const Session& s) {
    std::lock_guard cache(s.cache_lock);
    s.cached.reset();
    s.cached_bytes.clear();
  }

  // Caller holds the session's shared lock and its cache lock.
  std::optional<HttpResponse> ensure_reconstruction(const Session& s) const {
    if (s.cached) return std::nullopt;
    try {
      s.cached = reconstruct(s.current, solver_);
    } catch (const ConvergenceError& e) {
      return detail::json_response(503, {{"error", e.what()},
                                         {"iterations", e.stats().iterations},
                                         {"final_relative_residual", e.stats().final_relative_residual},
                                         {"wall_time", e.stats().wall_time}});
    }
    return std::nullopt;
  }

  // Layout per session: <dir>/<id>/source.{ppm,pgm}, current.scif, meta.json.
  void persist(const Session& s) const {
    if (dir_.empty()) return;
    const auto sdir = dir_ / s.id;
    std::filesystem::create_directories(sdir);
    const auto source_path = sdir / (s.source.channels() == 3 ? "source.ppm" : "source.pgm");
    if (!std::filesystem::exists(source_path)) write_image(s.source, source_path);
    const auto tmp = sdir / "current.scif.tmp";
    write_scif(s.current, tmp);
    std::filesystem::rename(tmp, sdir / "current.scif");
    std::vector<std::uint32_t> ids;
    for (const auto& c : s.current.contours.contours) ids.push_back(c.id);
    std::sort(ids.begin(), ids.end());  // records are stored in id order
    nlohmann::json meta{{"config", detail::config_json(s.config)},
                        {"created", s.created},
                        {"modified", s.modified},
                        {"contour_ids", ids}};
    const auto meta_text = meta.dump(2);
    write_file_bytes(sdir / "meta.json",
                     std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(meta_text.data()), meta_text.size()));
  }

  void recover() {
    for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
      if (!entry.is_directory()) continue;
      const auto sdir = entry.path();
      try {
        auto s = std::make_shared<Session>();
        s->id = sdir.filename().string();
        const auto ppm = sdir / "source.ppm";
        s->source = read_image(std::filesystem::exists(ppm) ? ppm : sdir / "source.pgm");
        s->current = read_scif(sdir / "current.scif");
        const auto meta_bytes = read_file_bytes(sdir / "meta.json");
        const auto meta = nlohmann::json::parse(meta_bytes.begin(), meta_bytes.end());
        const auto& cfg = meta.at("config");
        s->config.target_sparsity = cfg.at("sparsity").get<double>();
        s->config.kind = parse_feature_kind(cfg.at("kind").get<std::string>());
        s->config.min_contour_length = cfg.at("min_length").get<std::size_t>();
        s->config.presmooth_sigma = cfg.at("sigma").get<double>();
        s->config.sample_offset = cfg.at("offset").get<double>();
        s->created = meta.at("created").get<std::int64_t>();
        s->modified = meta.at("modified").get<std::int64_t>();
        const auto ids = meta.at("contour_ids").get<std::vector<std::uint32_t>>();
        auto& contours = s->current.contours.contours;
        if (ids.size() == contours.size())
          for (std::size_t i = 0; i < ids.size(); ++i) contours[i].id = ids[i];
        validate(s->current);
        sessions_[s->id] = std::move(s);
      } catch (const std::exception&) {
        // Half-written or foreign directories are skipped, not fatal.
      }
    }
  }

  std::filesystem::path dir_;
  SolverConfig solver_;
  mutable std::shared_mutex store_lock_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex rng_lock_;
  std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace scif
