#include "cafx/io/middleman.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <unordered_set>
#include <variant>

#include "cafx/atoms.hpp"
#include "cafx/io/basp.hpp"

namespace cafx::io {

namespace {

void set_nonblocking(int fd) {
  auto flags = fcntl(fd, F_GETFL, 0);
  fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

std::string sys_error_text(const char* what) {
  return std::string{what} + ": " + strerror(errno);
}

byte_buffer make_handshake_payload(const node_id& node, uint32_t actor_id,
                                   const std::optional<messaging_interface>&
                                     iface) {
  byte_buffer out;
  detail::put_bytes(out, byte_span{node.bytes.data(), 16});
  detail::put_u32(out, actor_id);
  detail::put_u8(out, iface ? 1 : 0);
  if (iface) {
    auto encoded = iface->encode();
    detail::put_bytes(out, byte_span{encoded.data(), encoded.size()});
  }
  return out;
}

struct handshake_payload {
  node_id node;
  uint32_t actor_id = 0;
  std::optional<messaging_interface> iface;
};

handshake_payload parse_handshake_payload(byte_span bytes) {
  detail::reader in{bytes};
  handshake_payload result;
  auto node = in.bytes(16);
  std::copy(node.begin(), node.end(), result.node.bytes.begin());
  result.actor_id = in.u32();
  auto typed = in.u8();
  if (typed != 0) {
    auto rest = in.bytes(in.remaining());
    result.iface = messaging_interface::decode(rest);
  } else {
    in.expect_done();
  }
  return result;
}

byte_buffer make_exit_payload(const exit_reason& reason) {
  byte_buffer out;
  detail::put_u8(out, static_cast<uint8_t>(reason.k));
  detail::put_u32(out, reason.code);
  return out;
}

exit_reason parse_exit_payload(byte_span bytes) {
  detail::reader in{bytes};
  exit_reason reason;
  auto k = in.u8();
  if (k < 1 || k > 4)
    throw failure{errc::codec_error, "invalid exit reason kind"};
  reason.k = static_cast<exit_reason::kind>(k);
  reason.code = in.u32();
  in.expect_done();
  return reason;
}

} // namespace

// -- connection and acceptor state ---------------------------------------------

struct middleman::connection_state {
  int fd = -1;
  connection_handle handle;
  intrusive_ptr<broker> owner;
  receive_policy policy = receive_policy::at_most(1024);
  byte_buffer input;
  byte_buffer output;
  message read_msg;
  bool dead = false;
};

struct middleman::acceptor_state {
  int fd = -1;
  accept_handle handle;
  intrusive_ptr<broker> owner;
  bool dead = false;
};

// -- remote proxies -------------------------------------------------------------

/// Local stand-in for an actor on another node; forwards envelopes as
/// dispatch frames through the transport connection it was created on.
class remote_proxy : public abstract_actor {
public:
  remote_proxy(actor_system* sys, actor_addr addr, middleman* mm,
               connection_handle conn,
               std::shared_ptr<std::atomic<bool>> mm_alive)
    : abstract_actor(sys, addr),
      mm_(mm),
      conn_(conn),
      mm_alive_(std::move(mm_alive)) {
    // nop
  }

  void enqueue(std::unique_ptr<envelope> env) override {
    if (terminated() || !mm_alive_->load(std::memory_order_acquire))
      return;
    byte_buffer payload;
    try {
      payload = serialize(env->content);
    } catch (const failure& err) {
      fprintf(stderr, "[cafx.io] cannot serialize message for %s: %s\n",
              to_string(address()).c_str(), err.what());
      return;
    }
    uint8_t flags = 0;
    if (env->cat == envelope::category::exit_signal) {
      flags |= basp::flag_exit_signal;
      if (env->hard_kill)
        flags |= basp::flag_hard_kill;
    }
    mm_->forward_dispatch(conn_, address(), env->sender, env->mid, flags,
                          std::move(payload));
  }

  void kill(const exit_reason& reason) {
    finalize(reason);
  }

  connection_handle conn() const noexcept {
    return conn_;
  }

private:
  middleman* mm_;
  connection_handle conn_;
  std::shared_ptr<std::atomic<bool>> mm_alive_;
};

// -- the transport broker --------------------------------------------------------

/// Implements the node-to-node protocol: handshakes, message dispatch,
/// death propagation and remote monitor registration.
class basp_broker : public broker {
public:
  struct published_entry {
    abstract_actor_ptr who;
    std::optional<messaging_interface> iface;
  };

  struct connect_state {
    std::promise<std::variant<abstract_actor_ptr, error>> result;
    std::optional<messaging_interface> expected;
  };

  struct peer_state {
    enum class stage : uint8_t {
      await_client_handshake,
      await_server_handshake,
      established,
    };

    stage st = stage::established;
    node_id remote;
    bool header_pending = true;
    basp::frame head;
    published_entry pub;
    std::shared_ptr<connect_state> pending;
    std::unordered_set<uint32_t> exported;
  };

  basp_broker(actor_config cfg, middleman* mm) : broker(cfg, mm) {
    // nop
  }

  behavior make_behavior() override {
    return {
      [this](const new_connection_msg& m) {
        // a peer connected to one of the published ports
        auto entry = published_.find(m.source.id);
        if (entry == published_.end()) {
          close(m.handle);
          return;
        }
        start_server_side(m.handle, entry->second);
      },
      [this](const new_data_msg& m) { handle_data(m); },
      [this](const connection_closed_msg& m) { handle_closed(m.handle); },
      [this](const acceptor_closed_msg&) {},
      [this](const error&) {},
    };
  }

  void publish_acceptor(accept_handle acceptor, published_entry entry) {
    published_.emplace(acceptor.id, std::move(entry));
  }

  void start_server_side(connection_handle conn, published_entry entry) {
    peer_state peer;
    peer.st = peer_state::stage::await_client_handshake;
    peer.pub = entry;
    peers_.emplace(conn.id, std::move(peer));
    configure_read(conn, receive_policy::exactly(basp::header_size));
    basp::frame f;
    f.op = basp::operation::server_handshake;
    f.source_node = home_system().node();
    f.source_actor = entry.who ? entry.who->address().id : 0;
    f.payload = make_handshake_payload(home_system().node(),
                                       f.source_actor, entry.iface);
    send_frame(conn, f);
  }

  void start_client_side(connection_handle conn,
                         std::shared_ptr<connect_state> pending) {
    peer_state peer;
    peer.st = peer_state::stage::await_server_handshake;
    peer.pending = std::move(pending);
    peers_.emplace(conn.id, std::move(peer));
    configure_read(conn, receive_policy::exactly(basp::header_size));
  }

  void post_dispatch(connection_handle conn, const actor_addr& dest,
                     const actor_addr& sender, uint64_t mid, uint8_t flags,
                     byte_buffer payload) {
    auto i = peers_.find(conn.id);
    if (i == peers_.end() || i->second.st != peer_state::stage::established)
      return; // connection raced away; rely on monitors
    basp::frame f;
    f.op = basp::operation::dispatch;
    f.flags = flags;
    f.source_node = home_system().node();
    f.dest_node = dest.node;
    f.dest_actor = dest.id;
    f.message_id = mid;
    f.payload = std::move(payload);
    abstract_actor_ptr source_ptr;
    if (sender && sender.node == home_system().node()) {
      f.source_actor = sender.id;
      source_ptr = home_system().resolve(sender);
    }
    send_frame(conn, f);
    if (f.source_actor != 0) {
      if (source_ptr) {
        export_actor(conn, i->second, source_ptr);
      } else {
        // the sender died before we could hook its exit
        send_kill_proxy(conn, i->second, f.source_actor,
                        exit_reason::unhandled_error());
      }
    }
  }

  /// Remote death propagation: makes sure the peer of `conn` receives a
  /// kill_proxy frame when `who` terminates.
  void export_actor(connection_handle conn, peer_state& peer,
                    const abstract_actor_ptr& who) {
    auto id = who->address().id;
    if (!peer.exported.insert(id).second)
      return;
    auto mm = &parent();
    auto alive = mm_alive();
    who->attach_on_exit([mm, alive, conn, id](const exit_reason& reason) {
      if (!alive->load(std::memory_order_acquire))
        return;
      mm->post([mm, conn, id, reason] {
        if (auto self = mm->transport())
          if (auto peer = self->find_peer(conn))
            self->send_kill_proxy(conn, *peer, id, reason);
      });
    });
  }

  peer_state* find_peer(connection_handle conn) {
    auto i = peers_.find(conn.id);
    return i == peers_.end() ? nullptr : &i->second;
  }

  void send_kill_proxy(connection_handle conn, peer_state& peer, uint32_t id,
                       const exit_reason& reason) {
    basp::frame f;
    f.op = basp::operation::kill_proxy;
    f.source_node = home_system().node();
    f.dest_node = peer.remote;
    f.source_actor = id;
    f.payload = make_exit_payload(reason);
    send_frame(conn, f);
  }

  /// Asks the peer to notify us when the remote actor behind `who` dies;
  /// used when local actors monitor or link a proxy.
  void request_monitor(connection_handle conn, uint32_t remote_id) {
    auto peer = find_peer(conn);
    if (!peer || peer->st != peer_state::stage::established)
      return;
    basp::frame f;
    f.op = basp::operation::monitor;
    f.source_node = home_system().node();
    f.dest_node = peer->remote;
    f.dest_actor = remote_id;
    send_frame(conn, f);
  }

private:
  void send_frame(connection_handle conn, const basp::frame& f) {
    auto bytes = basp::encode(f);
    write(conn, byte_span{bytes.data(), bytes.size()});
  }

  void handle_data(const new_data_msg& m) {
    auto peer = find_peer(m.handle);
    if (!peer) {
      close(m.handle);
      return;
    }
    try {
      if (peer->header_pending) {
        auto info
          = basp::decode_header(byte_span{m.buf.data(), m.buf.size()});
        if (info.head.version != basp::protocol_version)
          throw failure{errc::version_mismatch,
                        "peer speaks protocol version "
                          + std::to_string(info.head.version)};
        peer->head = info.head;
        if (info.payload_len == 0) {
          handle_frame(m.handle, *peer, {});
        } else {
          peer->header_pending = false;
          configure_read(m.handle, receive_policy::exactly(info.payload_len));
        }
      } else {
        peer->header_pending = true;
        configure_read(m.handle,
                       receive_policy::exactly(basp::header_size));
        handle_frame(m.handle, *peer,
                     byte_span{m.buf.data(), m.buf.size()});
      }
    } catch (const failure& err) {
      // malformed traffic tears down the connection, never the node
      fail_connection(m.handle, error{err.code(), err.what()});
    }
  }

  void handle_frame(connection_handle conn, peer_state& peer,
                    byte_span payload) {
    using stage = peer_state::stage;
    const auto& head = peer.head;
    switch (head.op) {
      case basp::operation::server_handshake: {
        if (peer.st != stage::await_server_handshake)
          throw failure{errc::codec_error, "unexpected server handshake"};
        auto hs = parse_handshake_payload(payload);
        auto req = peer.pending;
        peer.pending = nullptr;
        if (hs.actor_id == 0) {
          fail_pending(req, error{errc::connect_failed,
                                  "peer has no published actor"});
          throw failure{errc::connect_failed, "no published actor"};
        }
        if (req && req->expected) {
          if (!hs.iface) {
            fail_pending(req,
                         error{errc::interface_mismatch,
                               "published actor is dynamically typed"});
            throw failure{errc::interface_mismatch, "dynamic published"};
          }
          if (!is_subset(*req->expected, *hs.iface)) {
            fail_pending(req,
                         error{errc::interface_mismatch,
                               "expected interface is not a subset of "
                               "the published interface"});
            throw failure{errc::interface_mismatch, "subset violation"};
          }
        }
        peer.remote = hs.node;
        peer.st = stage::established;
        basp::frame f;
        f.op = basp::operation::client_handshake;
        f.source_node = home_system().node();
        f.dest_node = hs.node;
        f.payload = make_handshake_payload(home_system().node(), 0, std::nullopt);
        send_frame(conn, f);
        auto proxy = parent().proxy_for_or_create(
          actor_addr{hs.node, hs.actor_id}, conn);
        if (req)
          req->result.set_value(proxy);
        break;
      }
      case basp::operation::client_handshake: {
        if (peer.st != stage::await_client_handshake)
          throw failure{errc::codec_error, "unexpected client handshake"};
        auto hs = parse_handshake_payload(payload);
        peer.remote = hs.node;
        peer.st = stage::established;
        if (peer.pub.who)
          export_actor(conn, peer,
                       abstract_actor_ptr{peer.pub.who});
        break;
      }
      case basp::operation::dispatch: {
        if (peer.st != stage::established)
          throw failure{errc::codec_error, "dispatch before handshake"};
        if (head.dest_node != home_system().node())
          return; // no routing through intermediaries
        auto dest = home_system().resolve(actor_addr{home_system().node(),
                                                head.dest_actor});
        if (!dest) {
          send_kill_proxy(conn, peer, head.dest_actor,
                          exit_reason::unhandled_error());
          return;
        }
        auto content = deserialize(payload);
        actor_addr sender;
        if (head.source_actor != 0) {
          sender = actor_addr{head.source_node, head.source_actor};
          parent().proxy_for_or_create(sender, conn);
        }
        auto env = make_envelope(std::move(content), sender,
                                 head.message_id);
        if (head.flags & basp::flag_exit_signal) {
          env->cat = envelope::category::exit_signal;
          env->hard_kill = (head.flags & basp::flag_hard_kill) != 0;
        }
        dest->enqueue(std::move(env));
        break;
      }
      case basp::operation::monitor: {
        if (peer.st != stage::established)
          throw failure{errc::codec_error, "monitor before handshake"};
        auto who = home_system().resolve(actor_addr{home_system().node(),
                                               head.dest_actor});
        if (who)
          export_actor(conn, peer, who);
        else
          send_kill_proxy(conn, peer, head.dest_actor,
                          exit_reason::unhandled_error());
        break;
      }
      case basp::operation::kill_proxy: {
        auto reason = parse_exit_payload(payload);
        parent().kill_proxy(actor_addr{head.source_node, head.source_actor},
                            reason);
        break;
      }
    }
  }

  void handle_closed(connection_handle conn) {
    auto i = peers_.find(conn.id);
    if (i == peers_.end())
      return;
    fail_pending(i->second.pending,
                 error{errc::connection_lost, "connection closed"});
    peers_.erase(i);
    parent().kill_proxies_on(conn, exit_reason::unhandled_error());
  }

  void fail_connection(connection_handle conn, error reason) {
    auto i = peers_.find(conn.id);
    if (i != peers_.end()) {
      fail_pending(i->second.pending, reason);
      peers_.erase(i);
    }
    close(conn);
    parent().kill_proxies_on(conn, exit_reason::unhandled_error());
  }

  static void fail_pending(const std::shared_ptr<connect_state>& pending,
                           error reason) {
    if (pending)
      pending->result.set_value(std::move(reason));
  }

  std::shared_ptr<std::atomic<bool>> mm_alive();

  std::unordered_map<uint64_t, published_entry> published_;
  std::unordered_map<uint64_t, peer_state> peers_;
};

// -- middleman -------------------------------------------------------------------

middleman::middleman(actor_system& sys, middleman_config cfg)
  : system_(sys), config_(cfg), alive_(std::make_shared<std::atomic<bool>>(true)) {
  init_event_types();
  int pipe_fds[2];
  if (pipe(pipe_fds) != 0)
    throw failure{errc::spawn_error, sys_error_text("pipe")};
  wakeup_read_ = pipe_fds[0];
  wakeup_write_ = pipe_fds[1];
  set_nonblocking(wakeup_read_);
  // the transport broker exists from the start
  actor_config bcfg;
  bcfg.system = &sys;
  bcfg.addr = actor_addr{sys.node(), sys.next_actor_id()};
  bcfg.run_mode = actor_config::kind::scheduled; // driven by the loop
  auto basp_ptr = make_counted<basp_broker>(bcfg, this);
  basp_ = basp_ptr.get();
  sys.register_actor(abstract_actor_ptr{basp_ptr.get()});
  brokers_.push_back(intrusive_ptr<broker>{basp_ptr.get()});
  sys.set_remote_resolver(
    [this](const actor_addr& addr) { return proxy_for(addr); });
  thread_ = std::thread{[this] { run(); }};
}

middleman::~middleman() {
  system_.set_remote_resolver(nullptr);
  alive_->store(false, std::memory_order_release);
  stop_.store(true, std::memory_order_release);
  wake();
  if (thread_.joinable())
    thread_.join();
  // Terminate brokers inline; the loop is gone.
  for (auto& b : brokers_) {
    if (b->terminated())
      continue;
    auto env = make_envelope(make_message(exit_atom::value, actor_addr{},
                                          exit_reason::normal()),
                             actor_addr{});
    env->cat = envelope::category::exit_signal;
    env->hard_kill = true;
    b->enqueue(std::move(env));
    b->resume(SIZE_MAX);
  }
  brokers_.clear();
  {
    std::lock_guard guard{proxies_mtx_};
    for (auto& [addr, ptr] : proxies_)
      static_cast<remote_proxy*>(ptr.get())
        ->kill(exit_reason::unhandled_error());
    proxies_.clear();
  }
  for (auto& [id, c] : connections_)
    if (c->fd >= 0)
      ::close(c->fd);
  for (auto& [id, a] : acceptors_)
    if (a->fd >= 0)
      ::close(a->fd);
  ::close(wakeup_read_);
  ::close(wakeup_write_);
}

void middleman::post(std::function<void()> f) {
  {
    std::lock_guard guard{commands_mtx_};
    commands_.push_back(std::move(f));
  }
  wake();
}

void middleman::wake() {
  uint8_t byte = 1;
  [[maybe_unused]] auto n = ::write(wakeup_write_, &byte, 1);
}

void middleman::notify_broker(broker* who) {
  {
    std::lock_guard guard{notify_mtx_};
    notified_.push_back(intrusive_ptr<broker>{who});
  }
  if (!on_loop_thread())
    wake();
}

actor middleman::make_broker_handle(
  std::function<behavior(local_actor*)> factory) {
  actor_config cfg;
  cfg.system = &system_;
  cfg.addr = actor_addr{system_.node(), system_.next_actor_id()};
  cfg.run_mode = actor_config::kind::scheduled;
  auto ptr = make_counted<broker>(cfg, this);
  ptr->set_factory(std::move(factory));
  system_.register_actor(abstract_actor_ptr{ptr.get()});
  auto result = actor{abstract_actor_ptr{ptr.get()}};
  post([this, ptr] {
    brokers_.push_back(ptr);
    resume_broker(ptr.get()); // run the factory on the loop thread
  });
  return result;
}

// -- TCP helpers -------------------------------------------------------------------

std::pair<accept_handle, uint16_t>
middleman::add_tcp_acceptor(const actor& owner, uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0)
    throw failure{errc::bind_failed, sys_error_text("socket")};
  int one = 1;
  setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    auto text = sys_error_text("bind");
    ::close(fd);
    throw failure{errc::bind_failed, text};
  }
  if (::listen(fd, 128) != 0) {
    auto text = sys_error_text("listen");
    ::close(fd);
    throw failure{errc::bind_failed, text};
  }
  socklen_t len = sizeof(addr);
  getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  auto bound = ntohs(addr.sin_port);
  set_nonblocking(fd);
  auto bptr = static_cast<broker*>(owner.ptr());
  std::promise<accept_handle> done;
  auto fut = done.get_future();
  post([this, fd, bptr, &done] {
    auto state = std::make_unique<acceptor_state>();
    state->fd = fd;
    state->handle = accept_handle{next_io_id_++};
    state->owner.reset(bptr);
    auto handle = state->handle;
    acceptors_.emplace(handle.id, std::move(state));
    done.set_value(handle);
  });
  if (fut.wait_for(config_.op_timeout) != std::future_status::ready)
    throw failure{errc::bind_failed, "event loop unresponsive"};
  return {fut.get(), bound};
}

int middleman::connect_fd(const std::string& host, uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  auto service = std::to_string(port);
  if (getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0)
    throw failure{errc::connect_failed, "cannot resolve host " + host};
  int fd = -1;
  for (auto p = res; p != nullptr; p = p->ai_next) {
    fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
    if (fd < 0)
      continue;
    if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0)
      break;
    ::close(fd);
    fd = -1;
  }
  freeaddrinfo(res);
  if (fd < 0)
    throw failure{errc::connect_failed,
                  sys_error_text(("connect to " + host).c_str())};
  return fd;
}

connection_handle middleman::add_tcp_connection(const actor& owner,
                                                const std::string& host,
                                                uint16_t port) {
  return adopt_endpoint(owner, pipe_endpoint{connect_fd(host, port)});
}

connection_handle middleman::adopt_endpoint(const actor& owner,
                                            pipe_endpoint ep) {
  if (!ep)
    throw failure{errc::connect_failed, "invalid endpoint"};
  set_nonblocking(ep.fd);
  int one = 1;
  setsockopt(ep.fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  auto bptr = static_cast<broker*>(owner.ptr());
  std::promise<connection_handle> done;
  auto fut = done.get_future();
  post([this, fd = ep.fd, bptr, &done] {
    auto conn = register_connection(fd, bptr);
    // let the owner configure the connection before any data shows up
    loop_deliver_event(bptr,
                       make_message(new_connection_msg{accept_handle{},
                                                       conn}));
    done.set_value(conn);
  });
  if (fut.wait_for(config_.op_timeout) != std::future_status::ready)
    throw failure{errc::connect_failed, "event loop unresponsive"};
  return fut.get();
}

void middleman::adopt_basp_server(int fd, abstract_actor_ptr whom,
                                  std::optional<messaging_interface> iface) {
  set_nonblocking(fd);
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  post([this, fd, whom = std::move(whom),
        iface = std::move(iface)]() mutable {
    auto conn = register_connection(fd, basp_);
    basp_->start_server_side(conn, {std::move(whom), std::move(iface)});
  });
}

abstract_actor_ptr
middleman::finish_remote_fd(int fd,
                            std::optional<messaging_interface> expected) {
  set_nonblocking(fd);
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  auto pending = std::make_shared<basp_broker::connect_state>();
  pending->expected = std::move(expected);
  auto fut = pending->result.get_future();
  post([this, fd, pending] {
    auto conn = register_connection(fd, basp_);
    basp_->start_client_side(conn, pending);
  });
  if (fut.wait_for(config_.op_timeout) != std::future_status::ready)
    throw failure{errc::connect_failed, "handshake timed out"};
  auto result = fut.get();
  if (std::holds_alternative<error>(result)) {
    const auto& err = std::get<error>(result);
    throw failure{err.code, err.context};
  }
  return std::get<abstract_actor_ptr>(result);
}

connection_handle middleman::register_connection(int fd, broker* owner) {
  auto state = std::make_unique<connection_state>();
  state->fd = fd;
  state->handle = connection_handle{next_io_id_++};
  state->owner.reset(owner);
  state->read_msg = make_message(new_data_msg{});
  auto handle = state->handle;
  connections_.emplace(handle.id, std::move(state));
  return handle;
}

// -- node-to-node API ----------------------------------------------------------------

uint16_t middleman::publish(const actor& whom, uint16_t port) {
  return publish_impl(abstract_actor_ptr{whom.ptr()}, std::nullopt, port);
}

uint16_t middleman::publish(const typed_actor& whom, uint16_t port) {
  return publish_impl(abstract_actor_ptr{whom.ptr()}, whom.interface(), port);
}

uint16_t middleman::publish_impl(abstract_actor_ptr whom,
                                 std::optional<messaging_interface> iface,
                                 uint16_t port) {
  if (!whom || whom->terminated())
    throw failure{errc::spawn_error, "cannot publish a terminated actor"};
  auto basp_handle = actor{abstract_actor_ptr{basp_}};
  auto [acceptor, bound] = add_tcp_acceptor(basp_handle, port);
  post([this, acceptor = acceptor, whom = std::move(whom),
        iface = std::move(iface)]() mutable {
    basp_->publish_acceptor(acceptor, {std::move(whom), std::move(iface)});
  });
  return bound;
}

actor middleman::remote_actor(const std::string& host, uint16_t port) {
  return actor{remote_impl(host, port, std::nullopt)};
}

typed_actor middleman::remote_actor(const std::string& host, uint16_t port,
                                    const messaging_interface& expected) {
  return typed_actor{remote_impl(host, port, expected), expected};
}

abstract_actor_ptr
middleman::remote_impl(const std::string& host, uint16_t port,
                       std::optional<messaging_interface> expected) {
  return finish_remote_fd(connect_fd(host, port), std::move(expected));
}

std::pair<pipe_endpoint, pipe_endpoint> middleman::make_pipe() {
  int fds[2];
  if (socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0)
    throw failure{errc::connect_failed, sys_error_text("socketpair")};
  return {pipe_endpoint{fds[0]}, pipe_endpoint{fds[1]}};
}

void middleman::publish_on(pipe_endpoint ep, const actor& whom) {
  publish_on_impl(ep, abstract_actor_ptr{whom.ptr()}, std::nullopt);
}

void middleman::publish_on(pipe_endpoint ep, const typed_actor& whom) {
  publish_on_impl(ep, abstract_actor_ptr{whom.ptr()}, whom.interface());
}

void middleman::publish_on_impl(pipe_endpoint ep, abstract_actor_ptr whom,
                                std::optional<messaging_interface> iface) {
  if (!whom || whom->terminated())
    throw failure{errc::spawn_error, "cannot publish a terminated actor"};
  if (!ep)
    throw failure{errc::connect_failed, "invalid endpoint"};
  adopt_basp_server(ep.fd, std::move(whom), std::move(iface));
}

actor middleman::remote_actor_on(pipe_endpoint ep) {
  return actor{remote_on_impl(ep, std::nullopt)};
}

typed_actor middleman::remote_actor_on(pipe_endpoint ep,
                                       const messaging_interface& expected) {
  return typed_actor{remote_on_impl(ep, expected), expected};
}

abstract_actor_ptr
middleman::remote_on_impl(pipe_endpoint ep,
                          std::optional<messaging_interface> expected) {
  if (!ep)
    throw failure{errc::connect_failed, "invalid endpoint"};
  return finish_remote_fd(ep.fd, std::move(expected));
}

// -- proxy registry ------------------------------------------------------------------

abstract_actor_ptr middleman::proxy_for(const actor_addr& addr) {
  std::lock_guard guard{proxies_mtx_};
  auto i = proxies_.find(addr);
  return i == proxies_.end() ? nullptr : i->second;
}

abstract_actor_ptr middleman::proxy_for_or_create(const actor_addr& addr,
                                                  connection_handle conn) {
  {
    std::lock_guard guard{proxies_mtx_};
    auto i = proxies_.find(addr);
    if (i != proxies_.end())
      return i->second;
  }
  auto ptr = make_counted<remote_proxy>(&system_, addr, this, conn, alive_);
  abstract_actor_ptr result{ptr.get()};
  {
    std::lock_guard guard{proxies_mtx_};
    auto [i, inserted] = proxies_.emplace(addr, result);
    if (!inserted)
      return i->second;
  }
  // tell the peer we want a death notification
  basp_->request_monitor(conn, addr.id);
  return result;
}

void middleman::kill_proxy(const actor_addr& addr, const exit_reason& reason) {
  abstract_actor_ptr victim;
  {
    std::lock_guard guard{proxies_mtx_};
    auto i = proxies_.find(addr);
    if (i == proxies_.end())
      return;
    victim = std::move(i->second);
    proxies_.erase(i);
  }
  static_cast<remote_proxy*>(victim.get())->kill(reason);
}

void middleman::kill_proxies_on(connection_handle conn,
                                const exit_reason& reason) {
  std::vector<abstract_actor_ptr> victims;
  {
    std::lock_guard guard{proxies_mtx_};
    for (auto i = proxies_.begin(); i != proxies_.end();) {
      if (static_cast<remote_proxy*>(i->second.get())->conn() == conn) {
        victims.push_back(std::move(i->second));
        i = proxies_.erase(i);
      } else {
        ++i;
      }
    }
  }
  for (auto& v : victims)
    static_cast<remote_proxy*>(v.get())->kill(reason);
}

void middleman::forward_dispatch(connection_handle conn,
                                 const actor_addr& dest,
                                 const actor_addr& sender, uint64_t mid,
                                 uint8_t flags, byte_buffer payload) {
  post([this, conn, dest, sender, mid, flags,
        payload = std::move(payload)]() mutable {
    basp_->post_dispatch(conn, dest, sender, mid, flags, std::move(payload));
  });
}

// -- loop-side broker services ---------------------------------------------------------

middleman::connection_state*
middleman::find_connection(connection_handle conn) {
  auto i = connections_.find(conn.id);
  return i == connections_.end() || i->second->dead ? nullptr
                                                    : i->second.get();
}

void middleman::loop_configure_read(broker* who, connection_handle conn,
                                    receive_policy policy) {
  auto c = find_connection(conn);
  if (!c || c->owner.get() != who) {
    who->enqueue(make_envelope(make_message(error{errc::broker_error,
                                                  "unknown connection"}),
                               actor_addr{}));
    return;
  }
  c->policy = policy;
  // buffered bytes may satisfy the new policy; flush after this resume
  flush_queue_.push_back(conn);
}

void middleman::loop_write(broker* who, connection_handle conn,
                           byte_span bytes) {
  auto c = find_connection(conn);
  if (!c || c->owner.get() != who) {
    who->enqueue(make_envelope(make_message(error{errc::broker_error,
                                                  "unknown connection"}),
                               actor_addr{}));
    return;
  }
  c->output.insert(c->output.end(), bytes.begin(), bytes.end());
}

void middleman::loop_close(broker* who, connection_handle conn) {
  auto c = find_connection(conn);
  if (!c || c->owner.get() != who)
    return;
  drop_connection(*c, false);
}

void middleman::loop_close(broker* who, accept_handle acceptor) {
  auto i = acceptors_.find(acceptor.id);
  if (i == acceptors_.end() || i->second->owner.get() != who)
    return;
  i->second->dead = true;
}

// -- the loop ---------------------------------------------------------------------------

void middleman::loop_deliver_event(broker* who, message event) {
  who->enqueue(make_envelope(std::move(event), actor_addr{}));
  resume_broker(who);
}

void middleman::resume_broker(broker* who) {
  if (who->terminated())
    return;
  auto t0 = std::chrono::steady_clock::now();
  auto result = who->resume(SIZE_MAX);
  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
    std::chrono::steady_clock::now() - t0);
  if (config_.watchdog_threshold.count() > 0
      && elapsed > config_.watchdog_threshold)
    fprintf(stderr, "[cafx.io] broker %s spent %lld ms in one run\n",
            to_string(who->address()).c_str(),
            static_cast<long long>(elapsed.count()));
  if (result == resumable::resume_result::finished) {
    // release io owned by the dead broker
    for (auto& [id, c] : connections_)
      if (c->owner.get() == who)
        c->dead = true;
    for (auto& [id, a] : acceptors_)
      if (a->owner.get() == who)
        a->dead = true;
    for (auto i = brokers_.begin(); i != brokers_.end(); ++i) {
      if (i->get() == who) {
        brokers_.erase(i);
        break;
      }
    }
  }
}

void middleman::flush_input(connection_state& c) {
  while (!c.dead) {
    size_t chunk = 0;
    switch (c.policy.kind) {
      case receive_policy::mode::at_least:
        if (c.input.size() >= c.policy.amount)
          chunk = c.input.size();
        break;
      case receive_policy::mode::exactly:
        if (c.input.size() >= c.policy.amount)
          chunk = c.policy.amount;
        break;
      case receive_policy::mode::at_most:
        if (!c.input.empty())
          chunk = std::min(c.input.size(), c.policy.amount);
        break;
    }
    if (chunk == 0)
      return;
    // Rewrite the per-connection event message in place. As long as the
    // broker did not keep a reference, this never deep-copies.
    auto& event = c.read_msg.get_mutable<new_data_msg>(0);
    event.handle = c.handle;
    event.buf.assign(c.input.begin(),
                     c.input.begin() + static_cast<long>(chunk));
    c.input.erase(c.input.begin(), c.input.begin() + static_cast<long>(chunk));
    loop_deliver_event(c.owner.get(), c.read_msg);
  }
}

void middleman::drop_connection(connection_state& c, bool deliver_event) {
  if (c.dead)
    return;
  c.dead = true;
  if (c.fd >= 0) {
    ::close(c.fd);
    c.fd = -1;
  }
  if (deliver_event)
    loop_deliver_event(c.owner.get(),
                       make_message(connection_closed_msg{c.handle}));
}

void middleman::run() {
  loop_id_ = std::this_thread::get_id();
  std::vector<pollfd> fds;
  std::vector<uint64_t> conn_ids;
  std::vector<uint64_t> acceptor_ids;
  while (!stop_.load(std::memory_order_acquire)) {
    // commands from other threads
    std::vector<std::function<void()>> commands;
    {
      std::lock_guard guard{commands_mtx_};
      commands.swap(commands_);
    }
    for (auto& cmd : commands)
      cmd();
    // brokers woken by regular actor messages
    std::vector<intrusive_ptr<broker>> notified;
    {
      std::lock_guard guard{notify_mtx_};
      notified.swap(notified_);
    }
    for (auto& b : notified)
      resume_broker(b.get());
    // deferred policy-change flushes
    auto flushes = std::move(flush_queue_);
    flush_queue_.clear();
    for (auto conn : flushes)
      if (auto c = find_connection(conn))
        flush_input(*c);
    // sweep dead io state
    for (auto i = connections_.begin(); i != connections_.end();) {
      if (i->second->dead) {
        if (i->second->fd >= 0)
          ::close(i->second->fd);
        i = connections_.erase(i);
      } else {
        ++i;
      }
    }
    std::vector<std::pair<intrusive_ptr<broker>, accept_handle>> closed_acceptors;
    for (auto i = acceptors_.begin(); i != acceptors_.end();) {
      if (i->second->dead) {
        closed_acceptors.emplace_back(i->second->owner, i->second->handle);
        ::close(i->second->fd);
        i = acceptors_.erase(i);
      } else {
        ++i;
      }
    }
    for (auto& [owner, handle] : closed_acceptors)
      loop_deliver_event(owner.get(),
                         make_message(acceptor_closed_msg{handle}));
    // build the poll set
    fds.clear();
    conn_ids.clear();
    acceptor_ids.clear();
    fds.push_back(pollfd{wakeup_read_, POLLIN, 0});
    for (auto& [id, a] : acceptors_) {
      fds.push_back(pollfd{a->fd, POLLIN, 0});
      acceptor_ids.push_back(id);
    }
    for (auto& [id, c] : connections_) {
      short events = POLLIN;
      if (!c->output.empty())
        events |= POLLOUT;
      fds.push_back(pollfd{c->fd, events, 0});
      conn_ids.push_back(id);
    }
    auto n = ::poll(fds.data(), fds.size(), 100);
    if (n <= 0)
      continue;
    if (fds[0].revents & POLLIN) {
      uint8_t buf[64];
      while (::read(wakeup_read_, buf, sizeof(buf)) > 0)
        continue;
    }
    size_t index = 1;
    for (auto id : acceptor_ids) {
      auto revents = fds[index++].revents;
      if (!(revents & POLLIN))
        continue;
      auto it = acceptors_.find(id);
      if (it == acceptors_.end() || it->second->dead)
        continue;
      for (;;) {
        auto client = ::accept(it->second->fd, nullptr, nullptr);
        if (client < 0)
          break;
        set_nonblocking(client);
        int one = 1;
        setsockopt(client, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        auto conn = register_connection(client, it->second->owner.get());
        loop_deliver_event(it->second->owner.get(),
                           make_message(new_connection_msg{
                             it->second->handle, conn}));
      }
    }
    for (auto id : conn_ids) {
      auto revents = fds[index++].revents;
      if (revents == 0)
        continue;
      auto it = connections_.find(id);
      if (it == connections_.end() || it->second->dead)
        continue;
      auto& c = *it->second;
      if (revents & POLLOUT) {
        auto n_written
          = ::send(c.fd, c.output.data(), c.output.size(), MSG_NOSIGNAL);
        if (n_written > 0)
          c.output.erase(c.output.begin(), c.output.begin() + n_written);
        else if (n_written < 0 && errno != EAGAIN && errno != EWOULDBLOCK) {
          drop_connection(c, true);
          continue;
        }
      }
      if (revents & POLLIN) {
        bool closed = false;
        uint8_t buf[64 * 1024];
        for (;;) {
          auto n_read = ::read(c.fd, buf, sizeof(buf));
          if (n_read > 0) {
            c.input.insert(c.input.end(), buf, buf + n_read);
            if (static_cast<size_t>(n_read) < sizeof(buf))
              break;
          } else if (n_read == 0) {
            closed = true;
            break;
          } else {
            if (errno != EAGAIN && errno != EWOULDBLOCK)
              closed = true;
            break;
          }
        }
        flush_input(c);
        if (closed)
          drop_connection(c, true);
      } else if (revents & (POLLERR | POLLHUP)) {
        flush_input(c);
        drop_connection(c, true);
      }
    }
  }
}

// -- glue ----------------------------------------------------------------------------

std::shared_ptr<std::atomic<bool>> basp_broker::mm_alive() {
  return parent().alive_;
}

void broker::configure_read(connection_handle conn, receive_policy policy) {
  mm_->loop_configure_read(this, conn, policy);
}

void broker::write(connection_handle conn, byte_span bytes) {
  mm_->loop_write(this, conn, bytes);
}

void broker::close(connection_handle conn) {
  mm_->loop_close(this, conn);
}

void broker::close(accept_handle acceptor) {
  mm_->loop_close(this, acceptor);
}

void broker::on_unblocked() {
  mm_->notify_broker(this);
}

} // namespace cafx::io
