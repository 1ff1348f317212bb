#pragma once

#include "ivnsim/config.hpp"
#include "ivnsim/diagnostics.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ivnsim::andl {

/// Source position that never takes part in AST equality.
struct Pos : SourcePos {
    Pos() = default;
    Pos(SourcePos p) : SourcePos(p) {} // NOLINT(google-explicit-constructor)
    friend bool operator==(const Pos&, const Pos&) { return true; }
};

enum class Kind { EthernetLink, CanLink, Node, Gateway, Switch };

std::string_view to_string(Kind k) noexcept;
std::optional<Kind> parse_kind(std::string_view s) noexcept;

struct Param {
    std::string name;
    std::string value; // raw value text, e.g. "100Mb/s"
    Pos pos;
    friend bool operator==(const Param&, const Param&) = default;
};

/// A declaration inside a types block or a devices block.
struct Decl {
    Kind kind = Kind::Node;
    std::string name;
    std::string extends; // qualified "types.Name", empty if none
    bool has_body = false;
    std::vector<std::string> pools;
    std::vector<Param> params;
    Pos pos;
    friend bool operator==(const Decl&, const Decl&) = default;
};

struct TypesBlock {
    std::string name;
    std::vector<Decl> decls;
    Pos pos;
    friend bool operator==(const TypesBlock&, const TypesBlock&) = default;
};

struct LinkRef {
    bool anonymous = false; // {new Type}
    std::string name;       // link name, or the type for anonymous links
    friend bool operator==(const LinkRef&, const LinkRef&) = default;
};

struct Connection {
    std::string a;
    std::optional<LinkRef> link;
    std::string b;
    Pos pos;
    friend bool operator==(const Connection&, const Connection&) = default;
};

struct Segment {
    std::string name;
    std::vector<Connection> connections;
    Pos pos;
    friend bool operator==(const Segment&, const Segment&) = default;
};

struct MapEntry {
    std::string target;
    std::optional<Binding> binding;
    Pos pos;
    friend bool operator==(const MapEntry&, const MapEntry&) = default;
};

struct Message {
    std::string name;
    std::string sender;
    std::vector<std::string> receivers;
    std::optional<std::int64_t> payload;
    std::optional<SimTime> period;
    std::optional<SimTime> offset;
    std::optional<SimTime> release_jitter;
    bool multicast = false;
    std::vector<MapEntry> mapping;
    Pos pos;
    friend bool operator==(const Message&, const Message&) = default;
};

struct Network {
    std::string name;
    std::vector<std::string> inline_ini; // verbatim fenced blocks
    std::vector<Decl> devices;
    std::vector<Segment> segments;
    std::vector<Message> messages;
    Pos pos;
    friend bool operator==(const Network&, const Network&) = default;
};

struct File {
    std::vector<TypesBlock> types;
    std::vector<Network> networks;
    friend bool operator==(const File&, const File&) = default;
};

/// Parses one source text. Syntax errors are collected and parsing resumes
/// at the next statement; positions carry `file_index`.
File parse(std::string_view text, Diagnostics& diags, int file_index = 0);

/// Canonical source text; parse(print(f)) == f.
std::string print(const File& file);

/// Concatenates the types and networks of several files.
File merge(std::vector<File> files);

struct CompileOptions {
    /// Network to compile; empty selects the only one. Blocks that share a
    /// name are merged in order.
    std::string network;
    /// Applied after the inline ini blocks.
    std::vector<std::pair<std::string, std::string>> overrides;
};

/// Lowers, applies overrides and derives. The result is meaningful only
/// when no error was reported.
NetworkConfig lower(const File& file, const CompileOptions& options, Diagnostics& diags);

/// All diagnostics of lowering and derivation.
Diagnostics validate(const File& file, const CompileOptions& options = {});

/// Throws InternalConsistency if any error is reported.
NetworkConfig compile(const File& file, const CompileOptions& options = {});

/// parse + lower in one step.
NetworkConfig compile_text(std::string_view text, const CompileOptions& options, Diagnostics& diags);

} // namespace ivnsim::andl
