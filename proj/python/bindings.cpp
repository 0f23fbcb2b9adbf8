#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cafx/atom.hpp"
#include "cafx/bench/bench.hpp"
#include "cafx/interface.hpp"
#include "cafx/message.hpp"

namespace py = pybind11;
using namespace cafx;

namespace {

std::any py_to_any(type_id type, py::handle value) {
  switch (type) {
    case builtin::boolean:
      return std::any{value.cast<bool>()};
    case builtin::i8:
      return std::any{value.cast<int8_t>()};
    case builtin::i16:
      return std::any{value.cast<int16_t>()};
    case builtin::i32:
      return std::any{value.cast<int32_t>()};
    case builtin::i64:
      return std::any{value.cast<int64_t>()};
    case builtin::u8:
      return std::any{value.cast<uint8_t>()};
    case builtin::u16:
      return std::any{value.cast<uint16_t>()};
    case builtin::u32:
      return std::any{value.cast<uint32_t>()};
    case builtin::u64:
      return std::any{value.cast<uint64_t>()};
    case builtin::f32:
      return std::any{value.cast<float>()};
    case builtin::f64:
      return std::any{value.cast<double>()};
    case builtin::text:
      return std::any{value.cast<std::string>()};
    case builtin::bytes: {
      auto raw = value.cast<py::bytes>().cast<std::string>();
      return std::any{byte_buffer{raw.begin(), raw.end()}};
    }
    case builtin::atom:
      return std::any{atom_encode(value.cast<std::string>())};
    default:
      throw failure{errc::unknown_type,
                    "type id " + std::to_string(type)
                      + " has no Python bridge"};
  }
}

py::object any_to_py(type_id type, const std::any& value) {
  switch (type) {
    case builtin::boolean:
      return py::cast(*std::any_cast<bool>(&value));
    case builtin::i8:
      return py::cast(*std::any_cast<int8_t>(&value));
    case builtin::i16:
      return py::cast(*std::any_cast<int16_t>(&value));
    case builtin::i32:
      return py::cast(*std::any_cast<int32_t>(&value));
    case builtin::i64:
      return py::cast(*std::any_cast<int64_t>(&value));
    case builtin::u8:
      return py::cast(*std::any_cast<uint8_t>(&value));
    case builtin::u16:
      return py::cast(*std::any_cast<uint16_t>(&value));
    case builtin::u32:
      return py::cast(*std::any_cast<uint32_t>(&value));
    case builtin::u64:
      return py::cast(*std::any_cast<uint64_t>(&value));
    case builtin::f32:
      return py::cast(*std::any_cast<float>(&value));
    case builtin::f64:
      return py::cast(*std::any_cast<double>(&value));
    case builtin::text:
      return py::cast(*std::any_cast<std::string>(&value));
    case builtin::bytes: {
      const auto& buf = *std::any_cast<byte_buffer>(&value);
      return py::bytes(reinterpret_cast<const char*>(buf.data()), buf.size());
    }
    case builtin::atom:
      return py::cast(atom_decode(*std::any_cast<atom_value>(&value)));
    default:
      throw failure{errc::unknown_type,
                    "type id " + std::to_string(type)
                      + " has no Python bridge"};
  }
}

/// Entries are type names ("i32", "text", ...) or quoted atom constants
/// ("'plus'").
type_spec parse_spec(const std::string& entry) {
  if (entry.size() >= 2 && entry.front() == '\'' && entry.back() == '\'')
    return type_spec::atom_const(
      atom_encode(entry.substr(1, entry.size() - 2)));
  auto meta = type_registry::global().by_name(entry);
  if (!meta)
    throw failure{errc::unknown_type, "unknown type name: " + entry};
  return type_spec::of(meta->id);
}

std::vector<type_spec> parse_specs(const std::vector<std::string>& entries) {
  std::vector<type_spec> specs;
  specs.reserve(entries.size());
  for (const auto& e : entries)
    specs.push_back(parse_spec(e));
  return specs;
}

std::string spec_to_entry(const type_spec& spec) {
  if (spec.is_constant)
    return "'" + atom_decode(spec.constant) + "'";
  auto meta = type_registry::global().by_id(spec.type);
  return meta ? meta->name : "?";
}

messaging_interface
parse_interface(const std::vector<std::pair<std::vector<std::string>,
                                            std::vector<std::string>>>&
                  rules) {
  std::vector<rule> parsed;
  parsed.reserve(rules.size());
  for (const auto& [inputs, outputs] : rules)
    parsed.push_back(rule{parse_specs(inputs), parse_specs(outputs),
                          std::nullopt});
  return messaging_interface{std::move(parsed)};
}

message make_message_py(const std::vector<std::pair<std::string, py::object>>&
                          elements) {
  std::vector<message_data::element> elems;
  elems.reserve(elements.size());
  for (const auto& [name, value] : elements) {
    auto meta = type_registry::global().by_name(name);
    if (!meta)
      throw failure{errc::unknown_type, "unknown type name: " + name};
    elems.push_back({meta->id, py_to_any(meta->id, value)});
  }
  if (elems.empty())
    return message{};
  return message{make_counted<message_data>(std::move(elems))};
}

py::dict report_to_dict(const bench::bench_report& report) {
  py::dict result;
  result["name"] = report.name;
  result["params"] = report.params;
  result["wall_clock_ms"] = report.wall_clock_ms;
  result["checksum"] = report.checksum;
  result["peak_rss_bytes"] = report.peak_rss_bytes;
  py::list samples;
  for (const auto& [t, rss] : report.memory_samples)
    samples.append(py::make_tuple(t, rss));
  result["memory_samples"] = samples;
  return result;
}

bench::bench_options options_for(size_t workers) {
  bench::bench_options opts;
  opts.workers = workers;
  return opts;
}

} // namespace

PYBIND11_MODULE(_cafx, m) {
  m.doc() = "Native actor runtime: atoms, copy-on-write messages, typed "
            "interfaces and the benchmark drivers.";

  py::register_exception<failure>(m, "RuntimeFailure");

  // -- atoms -----------------------------------------------------------------
  m.def("atom_encode", [](const std::string& text) {
    return static_cast<uint64_t>(atom_encode(text));
  });
  m.def("atom_decode", [](uint64_t value) {
    return atom_decode(static_cast<atom_value>(value));
  });
  m.def("is_valid_atom_text",
        [](const std::string& text) { return is_valid_atom_text(text); });

  // -- messages ---------------------------------------------------------------
  py::class_<message>(m, "Message")
    .def(py::init(&make_message_py),
         "Builds a message from (type_name, value) pairs; atoms are "
         "written as their text.")
    .def("__len__", &message::size)
    .def("type_name",
         [](const message& msg, size_t index) {
           auto meta = type_registry::global().by_id(msg.type_at(index));
           return meta ? meta->name : "?";
         })
    .def("get",
         [](const message& msg, size_t index) {
           return any_to_py(msg.type_at(index), msg.get_any(index));
         })
    .def("set",
         [](message& msg, size_t index, py::object value) {
           auto type = msg.type_at(index);
           msg.get_mutable_any(index) = py_to_any(type, value);
         },
         "Mutates one element, detaching the payload if it is shared.")
    .def("share", [](const message& msg) { return message{msg}; },
         "Returns a handle sharing the same payload.")
    .def("__eq__",
         [](const message& lhs, const message& rhs) { return lhs == rhs; })
    .def("serialize", [](const message& msg) {
      auto bytes = serialize(msg);
      return py::bytes(reinterpret_cast<const char*>(bytes.data()),
                       bytes.size());
    });
  m.def("deserialize", [](py::bytes raw) {
    auto data = raw.cast<std::string>();
    return deserialize(
      byte_span{reinterpret_cast<const uint8_t*>(data.data()), data.size()});
  });
  m.def("copy_stats", [] {
    auto snapshot = copy_stats::now();
    return py::make_tuple(snapshot.deep_copies, snapshot.shares);
  });

  // -- messaging interfaces -----------------------------------------------------
  py::class_<messaging_interface>(m, "MessagingInterface")
    .def(py::init(&parse_interface),
         "Builds an interface from (inputs, outputs) rule pairs; entries "
         "are type names or quoted atom constants like \"'plus'\".")
    .def("__len__", &messaging_interface::size)
    .def("__eq__",
         [](const messaging_interface& a, const messaging_interface& b) {
           return a == b;
         })
    .def("rules",
         [](const messaging_interface& iface) {
           py::list rules;
           for (const auto& r : iface.rules()) {
             py::list inputs, outputs;
             for (const auto& e : r.inputs)
               inputs.append(spec_to_entry(e));
             for (const auto& e : r.outputs)
               outputs.append(spec_to_entry(e));
             rules.append(py::make_tuple(inputs, outputs));
           }
           return rules;
         })
    .def("encode", [](const messaging_interface& iface) {
      auto bytes = iface.encode();
      return py::bytes(reinterpret_cast<const char*>(bytes.data()),
                       bytes.size());
    });
  m.def("is_subset", &is_subset,
        "True iff every rule of the first interface appears in the second.");

  // -- numeric kernels ------------------------------------------------------------
  m.def("factorize", &bench::factorize, py::arg("n"),
        py::call_guard<py::gil_scoped_release>());
  m.def("mandelbrot_cell", &bench::mandelbrot_cell, py::arg("re"),
        py::arg("im"), py::arg("max_iter"));
  m.def("mandelbrot_row", &bench::mandelbrot_row, py::arg("y"),
        py::arg("size"), py::arg("max_iter"),
        py::call_guard<py::gil_scoped_release>());

  // -- benchmark drivers ------------------------------------------------------------
  m.def(
    "run_creation",
    [](uint32_t exponent, size_t workers) {
      bench::bench_report report;
      {
        py::gil_scoped_release release;
        report = bench::run_creation(exponent, options_for(workers));
      }
      return report_to_dict(report);
    },
    py::arg("exponent"), py::arg("workers") = 0);
  m.def(
    "run_mailbox",
    [](uint32_t senders, uint64_t msgs, size_t workers) {
      bench::bench_report report;
      {
        py::gil_scoped_release release;
        report = bench::run_mailbox(senders, msgs, options_for(workers));
      }
      return report_to_dict(report);
    },
    py::arg("senders"), py::arg("msgs_per_sender"), py::arg("workers") = 0);
  m.def(
    "run_mixed",
    [](uint32_t rings, uint32_t ring_size, uint32_t token, uint32_t reps,
       uint64_t factor, const std::string& decrement, size_t workers) {
      auto mode = decrement == "hop" ? bench::decrement_mode::per_hop
                                     : bench::decrement_mode::per_round;
      bench::bench_report report;
      {
        py::gil_scoped_release release;
        report = bench::run_mixed(rings, ring_size, token, reps, factor,
                                  mode, options_for(workers));
      }
      return report_to_dict(report);
    },
    py::arg("rings"), py::arg("ring_size"), py::arg("token"),
    py::arg("repetitions"),
    py::arg("factor_target") = bench::default_factor_target,
    py::arg("decrement") = "round", py::arg("workers") = 0);
  m.def(
    "run_mandelbrot",
    [](uint32_t size, uint32_t max_iter, size_t workers) {
      bench::bench_report report;
      {
        py::gil_scoped_release release;
        report = bench::run_mandelbrot(size, max_iter, options_for(workers));
      }
      return report_to_dict(report);
    },
    py::arg("size"), py::arg("max_iter"), py::arg("workers") = 0);

  m.attr("default_factor_target") = bench::default_factor_target;
}
