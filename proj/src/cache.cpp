#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include "oocheck/backend.hpp"
#include "oocheck/errors.hpp"

namespace oocheck::backend {

namespace fs = std::filesystem;

namespace {

std::string utc_now_iso8601() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string unique_suffix() {
  static std::atomic<std::uint64_t> counter{0};
  std::ostringstream s;
  s << ".tmp." << std::this_thread::get_id() << '.' << counter++;
  return s.str();
}

}  // namespace

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

fs::path ResponseCache::path_for(std::string_view digest) const {
  if (digest.size() < 2) throw PreconditionError("cache digest too short");
  return dir_ / std::string(digest.substr(0, 2)) / (std::string(digest) + ".json");
}

std::optional<std::string> ResponseCache::get(std::string_view digest) const {
  std::ifstream in(path_for(digest));
  if (!in) return std::nullopt;
  try {
    auto j = nlohmann::json::parse(in);
    if (j.at("request_digest").get<std::string>() != digest) return std::nullopt;
    return j.at("response_text").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    // a torn or foreign file is treated as a miss and overwritten on put
    return std::nullopt;
  }
}

bool ResponseCache::put(std::string_view digest, std::string_view response_text, std::string_view backend_id) {
  const auto target = path_for(digest);
  if (get(digest)) return false;
  fs::create_directories(target.parent_path());
  nlohmann::json j{{"request_digest", digest},
                   {"response_text", response_text},
                   {"created_at", utc_now_iso8601()},
                   {"backend_id", backend_id}};
  auto tmp = target;
  tmp += unique_suffix();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write cache entry " + tmp.string());
    out << j.dump(2) << '\n';
    if (!out) throw Error("cannot write cache entry " + tmp.string());
  }
  fs::rename(tmp, target);
  return true;
}

CachedBackend::CachedBackend(std::shared_ptr<CompletionBackend> inner, std::shared_ptr<ResponseCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {
  if (!inner_ || !cache_) throw PreconditionError("CachedBackend needs a backend and a cache");
}

std::shared_ptr<std::mutex> CachedBackend::key_lock(const std::string& key) {
  std::lock_guard lock(locks_mutex_);
  auto& slot = locks_[key];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

CompletionResponse CachedBackend::complete(const CompletionRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  const auto key = cache_key(inner_->id(), request);
  auto mtx = key_lock(key);
  std::lock_guard guard(*mtx);
  if (auto hit = cache_->get(key)) {
    ++hits_;
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    return {std::move(*hit), inner_->id(), true, static_cast<std::uint64_t>(elapsed.count())};
  }
  ++misses_;
  auto response = inner_->complete(request);
  cache_->put(key, response.text, inner_->id());
  response.cached = false;
  return response;
}

}  // namespace oocheck::backend
