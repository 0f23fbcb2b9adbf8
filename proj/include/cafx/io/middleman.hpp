#pragma once

#include <chrono>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cafx/actor_system.hpp"
#include "cafx/io/broker.hpp"
#include "cafx/io/events.hpp"
#include "cafx/scoped_actor.hpp"

namespace cafx::io {

class basp_broker;

struct middleman_config {
  /// How long publish/remote_actor wait for the loop and the handshake.
  std::chrono::milliseconds op_timeout{5000};
  /// Brokers spending longer than this inside one run are reported to
  /// stderr; zero disables the watchdog.
  std::chrono::milliseconds watchdog_threshold{100};
};

/// One end of an in-process byte pipe (a connected socket pair), used as
/// the deterministic transport for two-instance tests.
struct pipe_endpoint {
  int fd = -1;

  explicit operator bool() const noexcept {
    return fd >= 0;
  }
};

/// The single-threaded multiplexer: hosts brokers, accepts and connects
/// TCP streams, and runs the node-to-node transport with remote proxies.
/// All broker callbacks and protocol logic run on the loop thread.
class middleman {
public:
  explicit middleman(actor_system& sys, middleman_config cfg = {});

  middleman(const middleman&) = delete;
  middleman& operator=(const middleman&) = delete;

  /// Stops the loop, terminates all brokers and closes every socket.
  /// Destroy the middleman before its actor system.
  ~middleman();

  actor_system& system() noexcept {
    return system_;
  }

  const middleman_config& config() const noexcept {
    return config_;
  }

  // -- broker management ------------------------------------------------------

  struct server {
    actor broker_handle;
    accept_handle acceptor;
    uint16_t port = 0;
  };

  struct client {
    actor broker_handle;
    connection_handle connection;
  };

  /// Spawns a broker bound to a fresh TCP acceptor; port 0 picks an
  /// ephemeral port. The broker receives a new_connection_msg per accept.
  template <class F>
  server spawn_server(F factory, uint16_t port) {
    auto handle = spawn_broker(std::move(factory));
    auto [acceptor, bound] = add_tcp_acceptor(handle, port);
    return server{handle, acceptor, bound};
  }

  /// Spawns a broker connected to host:port.
  template <class F>
  client spawn_client(F factory, const std::string& host, uint16_t port) {
    auto handle = spawn_broker(std::move(factory));
    auto conn = add_tcp_connection(handle, host, port);
    return client{handle, conn};
  }

  /// Spawns a broker owning one end of an in-process pipe.
  template <class F>
  client spawn_pipe_broker(F factory, pipe_endpoint ep) {
    auto handle = spawn_broker(std::move(factory));
    auto conn = adopt_endpoint(handle, ep);
    return client{handle, conn};
  }

  /// Spawns a broker without any attached IO.
  template <class F>
  actor spawn_broker(F factory);

  // -- node-to-node messaging --------------------------------------------------

  /// Makes `whom` reachable on a TCP port; returns the bound port.
  uint16_t publish(const actor& whom, uint16_t port);

  uint16_t publish(const typed_actor& whom, uint16_t port);

  /// Connects to a published dynamic actor.
  actor remote_actor(const std::string& host, uint16_t port);

  /// Connects to a published actor and verifies that `expected` is a
  /// subset of the published interface.
  typed_actor remote_actor(const std::string& host, uint16_t port,
                           const messaging_interface& expected);

  /// Creates a connected in-process pipe.
  static std::pair<pipe_endpoint, pipe_endpoint> make_pipe();

  /// Serves `whom` to the peer at the other end of the pipe.
  void publish_on(pipe_endpoint ep, const actor& whom);

  void publish_on(pipe_endpoint ep, const typed_actor& whom);

  actor remote_actor_on(pipe_endpoint ep);

  typed_actor remote_actor_on(pipe_endpoint ep,
                              const messaging_interface& expected);

  // -- loop-internal plumbing (brokers and proxies) ----------------------------

  /// Runs `f` on the loop thread and wakes it.
  void post(std::function<void()> f);

  bool on_loop_thread() const noexcept {
    return std::this_thread::get_id() == loop_id_;
  }

  /// Marks a broker runnable; called from enqueue paths.
  void notify_broker(broker* who);

  void loop_configure_read(broker* who, connection_handle conn,
                           receive_policy policy);

  void loop_write(broker* who, connection_handle conn, byte_span bytes);

  void loop_close(broker* who, connection_handle conn);

  void loop_close(broker* who, accept_handle acceptor);

  /// Looks up an existing proxy; installed as the system's remote
  /// resolver.
  abstract_actor_ptr proxy_for(const actor_addr& addr);

  /// Returns the proxy for `addr`, creating it on first use and asking
  /// the peer behind `conn` for a death notification.
  abstract_actor_ptr proxy_for_or_create(const actor_addr& addr,
                                         connection_handle conn);

  /// Terminates the proxy for `addr` with `reason` (remote death).
  void kill_proxy(const actor_addr& addr, const exit_reason& reason);

  /// Terminates every proxy bound to `conn` (connection loss).
  void kill_proxies_on(connection_handle conn, const exit_reason& reason);

  /// Ships an envelope that a proxy accepted towards its remote actor.
  void forward_dispatch(connection_handle conn, const actor_addr& dest,
                        const actor_addr& sender, uint64_t mid,
                        uint8_t flags, byte_buffer payload);

  basp_broker* transport() const noexcept {
    return basp_;
  }

private:
  friend class basp_broker;

  struct connection_state;
  struct acceptor_state;

  actor make_broker_handle(std::function<behavior(local_actor*)> factory);

  std::pair<accept_handle, uint16_t> add_tcp_acceptor(const actor& owner,
                                                      uint16_t port);

  connection_handle add_tcp_connection(const actor& owner,
                                       const std::string& host,
                                       uint16_t port);

  connection_handle adopt_endpoint(const actor& owner, pipe_endpoint ep);

  connection_handle register_connection(int fd, broker* owner);

  int connect_fd(const std::string& host, uint16_t port);

  void adopt_basp_server(int fd, abstract_actor_ptr whom,
                         std::optional<messaging_interface> iface);

  abstract_actor_ptr finish_remote_fd(int fd,
                                      std::optional<messaging_interface>
                                        expected);

  uint16_t publish_impl(abstract_actor_ptr whom,
                        std::optional<messaging_interface> iface,
                        uint16_t port);

  void publish_on_impl(pipe_endpoint ep, abstract_actor_ptr whom,
                       std::optional<messaging_interface> iface);

  abstract_actor_ptr remote_impl(const std::string& host, uint16_t port,
                                 std::optional<messaging_interface> expected);

  abstract_actor_ptr remote_on_impl(pipe_endpoint ep,
                                    std::optional<messaging_interface>
                                      expected);


  void run();

  void loop_deliver_event(broker* who, message event);

  void resume_broker(broker* who);

  void flush_input(connection_state& c);

  void drop_connection(connection_state& c, bool deliver_event);

  connection_state* find_connection(connection_handle conn);

  void wake();

  actor_system& system_;
  middleman_config config_;
  std::thread thread_;
  std::thread::id loop_id_;
  std::atomic<bool> stop_{false};
  std::shared_ptr<std::atomic<bool>> alive_;

  int wakeup_read_ = -1;
  int wakeup_write_ = -1;

  std::mutex commands_mtx_;
  std::vector<std::function<void()>> commands_;

  std::mutex notify_mtx_;
  std::vector<intrusive_ptr<broker>> notified_;

  // loop-thread state
  uint64_t next_io_id_ = 1;
  std::unordered_map<uint64_t, std::unique_ptr<connection_state>> connections_;
  std::unordered_map<uint64_t, std::unique_ptr<acceptor_state>> acceptors_;
  std::vector<intrusive_ptr<broker>> brokers_;
  std::vector<connection_handle> flush_queue_;

  std::mutex proxies_mtx_;
  std::unordered_map<actor_addr, abstract_actor_ptr> proxies_;

  basp_broker* basp_ = nullptr; // owned via brokers_
};

template <class F>
actor middleman::spawn_broker(F factory) {
  init_event_types();
  std::function<behavior(local_actor*)> fn;
  if constexpr (std::is_invocable_v<F, broker*>) {
    fn = [f = std::move(factory)](local_actor* self) {
      return f(static_cast<broker*>(self));
    };
  } else {
    fn = [f = std::move(factory)](local_actor*) { return f(); };
  }
  return make_broker_handle(std::move(fn));
}

} // namespace cafx::io
