#include "ivnsim/andl.hpp"

#include <charconv>
#include <map>
#include <set>

namespace ivnsim::andl {

std::string_view to_string(Kind k) noexcept
{
    switch (k) {
    case Kind::EthernetLink: return "ethernetLink";
    case Kind::CanLink: return "canLink";
    case Kind::Node: return "node";
    case Kind::Gateway: return "gateway";
    case Kind::Switch: return "switch";
    }
    return "?";
}

std::optional<Kind> parse_kind(std::string_view s) noexcept
{
    for (Kind k : {Kind::EthernetLink, Kind::CanLink, Kind::Node, Kind::Gateway, Kind::Switch}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    return std::nullopt;
}

namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { Word, String, LBrace, RBrace, Semi, Colon, Comma, Arrow, Fenced, End, Bad };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    SourcePos pos;
};

std::string_view describe(const Token& t)
{
    switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::Fenced: return "fenced text";
    default: return t.text;
    }
}

bool word_char(char c)
{
    const auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '_' || c == '.' || c == '-' || c == '+' || c == '/' || c == '%';
}

class Lexer {
public:
    Lexer(std::string_view src, Diagnostics& diags, int file) : src_(src), diags_(diags), file_(file) {}

    std::vector<Token> run()
    {
        std::vector<Token> out;
        for (;;) {
            skip_space_and_comments();
            Token t;
            t.pos = here();
            if (i_ >= src_.size()) {
                t.kind = Tok::End;
                out.push_back(std::move(t));
                return out;
            }
            const char c = src_[i_];
            if (src_.substr(i_, 3) == "```") {
                advance(3);
                const auto end = src_.find("```", i_);
                if (end == std::string_view::npos) {
                    diags_.error("unterminated ``` block", t.pos);
                    i_ = src_.size();
                    continue;
                }
                std::string_view body = src_.substr(i_, end - i_);
                advance(end - i_ + 3);
                if (!body.empty() && body.front() == '\r') {
                    body.remove_prefix(1);
                }
                if (!body.empty() && body.front() == '\n') {
                    body.remove_prefix(1);
                }
                while (!body.empty() && std::isspace(static_cast<unsigned char>(body.back()))) {
                    body.remove_suffix(1);
                }
                t.kind = Tok::Fenced;
                t.text = std::string(body);
            } else if (src_.substr(i_, 4) == "<-->") {
                advance(4);
                t.kind = Tok::Arrow;
                t.text = "<-->";
            } else if (c == '{' || c == '}' || c == ';' || c == ':' || c == ',') {
                advance(1);
                t.kind = c == '{' ? Tok::LBrace : c == '}' ? Tok::RBrace : c == ';' ? Tok::Semi
                                                            : c == ':' ? Tok::Colon
                                                                       : Tok::Comma;
                t.text = std::string(1, c);
            } else if (c == '"') {
                const auto end = src_.find('"', i_ + 1);
                if (end == std::string_view::npos || src_.substr(i_, end - i_).find('\n') != std::string_view::npos) {
                    diags_.error("unterminated string", t.pos);
                    advance(1);
                    continue;
                }
                t.kind = Tok::String;
                t.text = std::string(src_.substr(i_, end - i_ + 1));
                advance(end - i_ + 1);
            } else if (word_char(c)) {
                std::size_t j = i_;
                while (j < src_.size() && word_char(src_[j]) && src_.substr(j, 2) != "//" &&
                       src_.substr(j, 2) != "/*") {
                    ++j;
                }
                if (j == i_) { // a lone comment opener is handled above; guard anyway
                    j = i_ + 1;
                }
                t.kind = Tok::Word;
                t.text = std::string(src_.substr(i_, j - i_));
                advance(j - i_);
            } else {
                t.kind = Tok::Bad;
                t.text = std::string(1, c);
                advance(1);
            }
            out.push_back(std::move(t));
        }
    }

private:
    SourcePos here() const { return SourcePos{line_, col_, file_}; }

    void advance(std::size_t n)
    {
        for (std::size_t k = 0; k < n && i_ < src_.size(); ++k, ++i_) {
            if (src_[i_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
        }
    }

    void skip_space_and_comments()
    {
        while (i_ < src_.size()) {
            if (std::isspace(static_cast<unsigned char>(src_[i_]))) {
                advance(1);
            } else if (src_.substr(i_, 2) == "//") {
                while (i_ < src_.size() && src_[i_] != '\n') {
                    advance(1);
                }
            } else if (src_.substr(i_, 2) == "/*") {
                const SourcePos start = here();
                const auto end = src_.find("*/", i_ + 2);
                if (end == std::string_view::npos) {
                    diags_.error("unterminated comment", start);
                    advance(src_.size() - i_);
                } else {
                    advance(end + 2 - i_);
                }
            } else {
                return;
            }
        }
    }

    std::string_view src_;
    Diagnostics& diags_;
    int file_;
    std::size_t i_ = 0;
    int line_ = 1;
    int col_ = 1;
};

// ---------------------------------------------------------------------------
// Parser

std::optional<std::int64_t> parse_integer(std::string_view s)
{
    int base = 10;
    bool neg = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        neg = s.front() == '-';
        s.remove_prefix(1);
    }
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
        base = 16;
        s.remove_prefix(2);
    }
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
        return std::nullopt;
    }
    return neg ? -v : v;
}

class Parser {
public:
    Parser(std::vector<Token> toks, Diagnostics& diags) : t_(std::move(toks)), diags_(diags) {}

    File run()
    {
        File f;
        while (!at(Tok::End)) {
            if (at_word("types")) {
                f.types.push_back(types_block());
            } else if (at_word("network")) {
                f.networks.push_back(network());
            } else {
                error("expected 'types' or 'network'");
                skip_item();
            }
        }
        return f;
    }

private:
    // -- token helpers --------------------------------------------------------

    const Token& peek(std::size_t k = 0) const { return t_[std::min(i_ + k, t_.size() - 1)]; }
    bool at(Tok k) const { return peek().kind == k; }
    bool at_word(std::string_view w) const { return at(Tok::Word) && peek().text == w; }
    Token take()
    {
        Token t = peek();
        if (i_ + 1 < t_.size()) {
            ++i_;
        }
        return t;
    }

    void error(const std::string& msg) { error_at(msg, peek()); }
    void error_at(const std::string& msg, const Token& t)
    {
        // One report per position keeps cascades short.
        if (last_error_ && *last_error_ == t.pos) {
            return;
        }
        last_error_ = t.pos;
        diags_.error(msg + ", found '" + std::string(describe(t)) + "'", t.pos);
    }

    bool expect(Tok k, std::string_view what)
    {
        if (at(k)) {
            take();
            return true;
        }
        error("expected " + std::string(what));
        return false;
    }

    std::optional<Token> expect_word(std::string_view what)
    {
        if (at(Tok::Word)) {
            return take();
        }
        error("expected " + std::string(what));
        return std::nullopt;
    }

    bool expect_keyword(std::string_view kw)
    {
        if (at_word(kw)) {
            take();
            return true;
        }
        error("expected '" + std::string(kw) + "'");
        return false;
    }

    /// Skips one statement: up to and including ';', or a balanced block.
    void skip_item()
    {
        int depth = 0;
        while (!at(Tok::End)) {
            if (at(Tok::LBrace)) {
                ++depth;
            } else if (at(Tok::RBrace)) {
                if (depth == 0) {
                    return;
                }
                --depth;
                if (depth == 0) {
                    take();
                    if (at(Tok::Semi)) {
                        take();
                    }
                    return;
                }
            } else if (at(Tok::Semi) && depth == 0) {
                take();
                return;
            }
            take();
        }
    }

    /// Parses "{ item* }" calling `item` until the closing brace.
    template <typename F>
    void block(F&& item)
    {
        if (!expect(Tok::LBrace, "'{'")) {
            skip_item();
            return;
        }
        while (!at(Tok::RBrace) && !at(Tok::End)) {
            const std::size_t before = i_;
            item();
            if (i_ == before) {
                skip_item();
                if (i_ == before) {
                    take();
                }
            }
        }
        expect(Tok::RBrace, "'}'");
    }

    // -- declarations ---------------------------------------------------------

    TypesBlock types_block()
    {
        TypesBlock tb;
        tb.pos = take().pos;
        if (auto n = expect_word("types block name")) {
            tb.name = n->text;
        }
        block([&] {
            if (auto d = decl(true)) {
                tb.decls.push_back(std::move(*d));
            }
        });
        return tb;
    }

    std::optional<Decl> decl(bool in_types)
    {
        if (!at(Tok::Word) || !parse_kind(peek().text)) {
            error("expected ethernetLink, canLink, node, gateway or switch");
            skip_item();
            return std::nullopt;
        }
        Decl d;
        const Token kind = take();
        d.kind = *parse_kind(kind.text);
        d.pos = kind.pos;
        if (auto n = expect_word("a name")) {
            d.name = n->text;
        } else {
            skip_item();
            return std::nullopt;
        }
        if (at_word("extends")) {
            take();
            if (auto q = expect_word("a type name")) {
                d.extends = q->text;
            }
        }
        if (at(Tok::LBrace)) {
            d.has_body = true;
            block([&] { body_item(d); });
            if (at(Tok::Semi)) {
                take();
            }
            return d;
        }
        if (at(Tok::Semi)) {
            take();
        } else if (!in_types) {
            error("expected ';' after " + std::string(to_string(d.kind)) + " " + d.name);
        }
        return d;
    }

    void body_item(Decl& d)
    {
        if (at_word("pool") && peek(1).kind == Tok::Word && peek(2).kind == Tok::Semi) {
            take();
            d.pools.push_back(take().text);
            take();
            return;
        }
        auto name = expect_word("a parameter name");
        if (!name) {
            return;
        }
        if (!at(Tok::Word) && !at(Tok::String)) {
            error("expected a value for " + name->text);
            skip_item();
            return;
        }
        Param p{name->text, take().text, name->pos};
        d.params.push_back(std::move(p));
        expect(Tok::Semi, "';'");
    }

    // -- network --------------------------------------------------------------

    Network network()
    {
        Network n;
        n.pos = take().pos;
        if (auto name = expect_word("network name")) {
            n.name = name->text;
        }
        block([&] {
            if (at_word("inline")) {
                take();
                expect_keyword("ini");
                block([&] {
                    if (at(Tok::Fenced)) {
                        n.inline_ini.push_back(take().text);
                    } else {
                        error("expected ``` fenced ini text");
                        take();
                    }
                });
            } else if (at_word("devices")) {
                take();
                block([&] {
                    if (auto d = decl(false)) {
                        n.devices.push_back(std::move(*d));
                    }
                });
            } else if (at_word("connections")) {
                take();
                block([&] { segment(n); });
            } else if (at_word("communication")) {
                take();
                block([&] { message(n); });
            } else {
                error("expected inline, devices, connections or communication");
                skip_item();
            }
        });
        return n;
    }

    void segment(Network& n)
    {
        if (!at_word("segment")) {
            error("expected 'segment'");
            skip_item();
            return;
        }
        Segment s;
        s.pos = take().pos;
        if (auto name = expect_word("segment name")) {
            s.name = name->text;
        }
        block([&] {
            if (auto c = connection()) {
                s.connections.push_back(std::move(*c));
            }
        });
        n.segments.push_back(std::move(s));
    }

    std::optional<Connection> connection()
    {
        Connection c;
        auto a = expect_word("a device name");
        if (!a) {
            skip_item();
            return std::nullopt;
        }
        c.a = a->text;
        c.pos = a->pos;
        if (!expect(Tok::Arrow, "'<-->'")) {
            skip_item();
            return std::nullopt;
        }
        if (at(Tok::LBrace)) {
            take();
            if (!expect_keyword("new")) {
                skip_item();
                return std::nullopt;
            }
            auto type = expect_word("a link type");
            if (!type || !expect(Tok::RBrace, "'}'") || !expect(Tok::Arrow, "'<-->'")) {
                skip_item();
                return std::nullopt;
            }
            c.link = LinkRef{true, type->text};
            auto b = expect_word("a device name");
            if (!b) {
                skip_item();
                return std::nullopt;
            }
            c.b = b->text;
        } else {
            auto mid = expect_word("a device or link name");
            if (!mid) {
                skip_item();
                return std::nullopt;
            }
            if (at(Tok::Arrow)) {
                take();
                auto b = expect_word("a device name");
                if (!b) {
                    skip_item();
                    return std::nullopt;
                }
                c.link = LinkRef{false, mid->text};
                c.b = b->text;
            } else {
                c.b = mid->text;
            }
        }
        expect(Tok::Semi, "';'");
        return c;
    }

    // -- messages -------------------------------------------------------------

    std::optional<SimTime> time_value(const std::string& what)
    {
        auto w = expect_word(what);
        if (!w) {
            return std::nullopt;
        }
        auto t = parse_time(w->text);
        if (!t) {
            error_at("invalid time '" + w->text + "'", *w);
        }
        return t;
    }

    void message(Network& n)
    {
        if (!at_word("message")) {
            error("expected 'message'");
            skip_item();
            return;
        }
        Message m;
        m.pos = take().pos;
        if (auto name = expect_word("message name")) {
            m.name = name->text;
        }
        std::set<std::string> seen;
        block([&] {
            auto kw = expect_word("a message statement");
            if (!kw) {
                skip_item();
                return;
            }
            if (!seen.insert(kw->text).second) {
                diags_.error("message " + m.name + ": duplicate '" + kw->text + "'", kw->pos);
            }
            const std::string& k = kw->text;
            if (k == "sender") {
                if (auto w = expect_word("sender name")) {
                    m.sender = w->text;
                }
            } else if (k == "receivers") {
                m.receivers.clear();
                if (auto w = expect_word("receiver name")) {
                    m.receivers.push_back(w->text);
                }
                while (at(Tok::Comma)) {
                    take();
                    if (auto w = expect_word("receiver name")) {
                        m.receivers.push_back(w->text);
                    }
                }
            } else if (k == "payload") {
                if (auto w = expect_word("payload size")) {
                    m.payload = parse_bytes(w->text);
                    if (!m.payload) {
                        error_at("invalid payload '" + w->text + "'", *w);
                    }
                }
            } else if (k == "period") {
                m.period = time_value("period");
            } else if (k == "offset") {
                m.offset = time_value("offset");
            } else if (k == "releaseJitter") {
                m.release_jitter = time_value("release jitter");
            } else if (k == "multicast") {
                m.multicast = true;
            } else if (k == "mapping") {
                block([&] { map_entry(m); });
                if (at(Tok::Semi)) {
                    take();
                }
                return;
            } else {
                error_at("unknown message statement '" + k + "'", *kw);
                skip_item();
                return;
            }
            if (!expect(Tok::Semi, "';'")) {
                skip_item();
            }
        });
        n.messages.push_back(std::move(m));
    }

    struct Kv {
        Token key;
        Token value;
    };

    /// "{ key value; ... }" as raw pairs.
    std::vector<Kv> kv_block()
    {
        std::vector<Kv> out;
        block([&] {
            auto k = expect_word("a field name");
            if (!k) {
                skip_item();
                return;
            }
            auto v = expect_word("a value for " + k->text);
            if (!v) {
                skip_item();
                return;
            }
            out.push_back({*k, *v});
            expect(Tok::Semi, "';'");
        });
        return out;
    }

    void map_entry(Message& m)
    {
        auto target = expect_word("a mapping target");
        if (!target) {
            skip_item();
            return;
        }
        MapEntry e;
        e.target = target->text;
        e.pos = target->pos;
        if (at(Tok::Colon)) {
            take();
            e.binding = class_binding();
            if (!e.binding) {
                skip_item();
                return;
            }
        }
        expect(Tok::Semi, "';'");
        m.mapping.push_back(std::move(e));
    }

    std::optional<Binding> class_binding()
    {
        auto kind = expect_word("can, tt, avb, rc, be or pool");
        if (!kind) {
            return std::nullopt;
        }
        Binding b;
        std::map<std::string, const Token*> fields;
        std::vector<Kv> kvs;
        std::set<std::string> allowed;
        std::set<std::string> required;
        if (kind->text == "pool") {
            b.kind = BindingKind::Pool;
            auto name = expect_word("pool name");
            if (!name) {
                return std::nullopt;
            }
            b.pool = name->text;
            if (!at(Tok::LBrace)) {
                return b;
            }
            allowed = {"holdUp"};
        } else if (kind->text == "can") {
            b.kind = BindingKind::Can;
            allowed = required = {"id"};
        } else if (kind->text == "tt") {
            b.kind = BindingKind::Tt;
            allowed = required = {"ctID"};
        } else if (kind->text == "avb") {
            b.kind = BindingKind::Avb;
            allowed = {"id", "class"};
            required = {"id"};
        } else if (kind->text == "rc") {
            b.kind = BindingKind::Rc;
            allowed = {"vlID", "bag", "priority"};
            required = {"vlID", "bag"};
        } else if (kind->text == "be") {
            b.kind = BindingKind::Be;
            allowed = required = {"priority"};
        } else {
            error_at("unknown class binding '" + kind->text + "'", *kind);
            return std::nullopt;
        }
        kvs = kv_block();
        bool ok = true;
        for (const auto& kv : kvs) {
            if (!allowed.count(kv.key.text)) {
                diags_.error(kind->text + " binding has no field '" + kv.key.text + "'", kv.key.pos);
                ok = false;
                continue;
            }
            if (!fields.emplace(kv.key.text, &kv.value).second) {
                diags_.error("duplicate field '" + kv.key.text + "'", kv.key.pos);
                ok = false;
            }
        }
        for (const auto& r : required) {
            if (!fields.count(r)) {
                diags_.error(kind->text + " binding needs '" + r + "'", kind->pos);
                ok = false;
            }
        }
        auto integer = [&](const char* key, std::int32_t& out) {
            auto it = fields.find(key);
            if (it == fields.end()) {
                return;
            }
            auto v = parse_integer(it->second->text);
            if (!v || *v < 0 || *v > 0x7FFFFFFF) {
                diags_.error("invalid integer '" + it->second->text + "'", it->second->pos);
                ok = false;
                return;
            }
            out = static_cast<std::int32_t>(*v);
        };
        auto time = [&](const char* key) -> std::optional<SimTime> {
            auto it = fields.find(key);
            if (it == fields.end()) {
                return std::nullopt;
            }
            auto t = parse_time(it->second->text);
            if (!t) {
                diags_.error("invalid time '" + it->second->text + "'", it->second->pos);
                ok = false;
            }
            return t;
        };
        switch (b.kind) {
        case BindingKind::Can: integer("id", b.id); break;
        case BindingKind::Tt: integer("ctID", b.id); break;
        case BindingKind::Avb:
            integer("id", b.id);
            if (auto it = fields.find("class"); it != fields.end()) {
                if (it->second->text == "A" || it->second->text == "B") {
                    b.class_b = it->second->text == "B";
                } else {
                    diags_.error("avb class must be A or B", it->second->pos);
                    ok = false;
                }
            }
            break;
        case BindingKind::Rc:
            integer("vlID", b.id);
            integer("priority", b.priority);
            if (auto t = time("bag")) {
                b.bag = *t;
            }
            break;
        case BindingKind::Be: integer("priority", b.priority); break;
        case BindingKind::Pool: b.holdup = time("holdUp"); break;
        }
        if (!ok) {
            return std::nullopt;
        }
        return b;
    }

    std::vector<Token> t_;
    std::size_t i_ = 0;
    Diagnostics& diags_;
    std::optional<SourcePos> last_error_;
};

// ---------------------------------------------------------------------------
// Printer

class Printer {
public:
    std::string run(const File& f)
    {
        for (const auto& tb : f.types) {
            line("types " + tb.name + " {");
            ++depth_;
            for (const auto& d : tb.decls) {
                decl(d);
            }
            --depth_;
            line("}");
        }
        for (const auto& n : f.networks) {
            network(n);
        }
        return out_;
    }

private:
    void line(const std::string& s)
    {
        out_.append(static_cast<std::size_t>(depth_) * 2, ' ');
        out_ += s;
        out_ += '\n';
    }

    void decl(const Decl& d)
    {
        std::string head = std::string(to_string(d.kind)) + " " + d.name;
        if (!d.extends.empty()) {
            head += " extends " + d.extends;
        }
        if (!d.has_body) {
            line(head + ";");
            return;
        }
        line(head + " {");
        ++depth_;
        for (const auto& p : d.pools) {
            line("pool " + p + ";");
        }
        for (const auto& p : d.params) {
            line(p.name + " " + p.value + ";");
        }
        --depth_;
        line("}");
    }

    static std::string binding(const Binding& b)
    {
        switch (b.kind) {
        case BindingKind::Can: return "can{id " + std::to_string(b.id) + ";}";
        case BindingKind::Tt: return "tt{ctID " + std::to_string(b.id) + ";}";
        case BindingKind::Avb:
            return "avb{id " + std::to_string(b.id) + ";" + (b.class_b ? " class B;" : "") + "}";
        case BindingKind::Rc:
            return "rc{vlID " + std::to_string(b.id) + "; bag " + format_time(b.bag) + ";" +
                   (b.priority != 0 ? " priority " + std::to_string(b.priority) + ";" : "") + "}";
        case BindingKind::Be: return "be{priority " + std::to_string(b.priority) + ";}";
        case BindingKind::Pool:
            return "pool " + b.pool + (b.holdup ? "{holdUp " + format_time(*b.holdup) + ";}" : "");
        }
        return {};
    }

    void network(const Network& n)
    {
        line("network " + n.name + " {");
        ++depth_;
        for (const auto& ini : n.inline_ini) {
            line("inline ini {");
            out_ += "```\n" + ini + "\n```\n";
            line("}");
        }
        line("devices {");
        ++depth_;
        for (const auto& d : n.devices) {
            decl(d);
        }
        --depth_;
        line("}");
        line("connections {");
        ++depth_;
        for (const auto& s : n.segments) {
            line("segment " + s.name + " {");
            ++depth_;
            for (const auto& c : s.connections) {
                std::string mid;
                if (c.link) {
                    mid = (c.link->anonymous ? "{new " + c.link->name + "}" : c.link->name) + " <--> ";
                }
                line(c.a + " <--> " + mid + c.b + ";");
            }
            --depth_;
            line("}");
        }
        --depth_;
        line("}");
        line("communication {");
        ++depth_;
        for (const auto& m : n.messages) {
            line("message " + m.name + " {");
            ++depth_;
            if (!m.sender.empty()) {
                line("sender " + m.sender + ";");
            }
            if (!m.receivers.empty()) {
                std::string r;
                for (const auto& x : m.receivers) {
                    r += (r.empty() ? "" : ", ") + x;
                }
                line("receivers " + r + ";");
            }
            if (m.payload) {
                line("payload " + std::to_string(*m.payload) + "B;");
            }
            if (m.period) {
                line("period " + format_time(*m.period) + ";");
            }
            if (m.offset) {
                line("offset " + format_time(*m.offset) + ";");
            }
            if (m.release_jitter) {
                line("releaseJitter " + format_time(*m.release_jitter) + ";");
            }
            if (m.multicast) {
                line("multicast;");
            }
            line("mapping {");
            ++depth_;
            for (const auto& e : m.mapping) {
                line(e.target + (e.binding ? ": " + binding(*e.binding) : "") + ";");
            }
            --depth_;
            line("}");
            --depth_;
            line("}");
        }
        --depth_;
        line("}");
        --depth_;
        line("}");
    }

    std::string out_;
    int depth_ = 0;
};

} // namespace

File parse(std::string_view text, Diagnostics& diags, int file_index)
{
    auto toks = Lexer(text, diags, file_index).run();
    std::vector<Token> good;
    for (auto& t : toks) {
        if (t.kind == Tok::Bad) {
            diags.error("unexpected character '" + t.text + "'", t.pos);
        } else {
            good.push_back(std::move(t));
        }
    }
    return Parser(std::move(good), diags).run();
}

std::string print(const File& file)
{
    return Printer().run(file);
}

File merge(std::vector<File> files)
{
    File out;
    for (auto& f : files) {
        for (auto& t : f.types) {
            out.types.push_back(std::move(t));
        }
        for (auto& n : f.networks) {
            out.networks.push_back(std::move(n));
        }
    }
    return out;
}

} // namespace ivnsim::andl
