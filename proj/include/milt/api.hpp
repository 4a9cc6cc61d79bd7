#pragma once

#include <filesystem>
#include <memory>
#include <string>

namespace milt {

// HTTP front end over the library. Datasets are the `*.csv` files of
// `data_dir`, addressed by file stem; sessions live in memory and are keyed by
// an opaque token.
class ApiServer {
 public:
  explicit ApiServer(std::filesystem::path data_dir);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds and serves until stop(). Port 0 picks a free port; see port().
  void bind(const std::string& host, int port);
  void run();
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace milt
