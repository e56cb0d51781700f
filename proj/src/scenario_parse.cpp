#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "farmsim/scenario.hpp"

namespace farmsim::scenario {

namespace {

enum class Tok { Ident, String, Number, LBrace, RBrace, Slash, Colon, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    double number = 0.0;
    int line = 1;
    int col = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& text) : text_(text) {}

    Token next() {
        skip_ws_and_comments();
        Token tok;
        tok.line = line_;
        tok.col = col_;
        if (pos_ >= text_.size()) {
            tok.kind = Tok::End;
            return tok;
        }
        char c = text_[pos_];
        if (c == '{') { advance(); tok.kind = Tok::LBrace; tok.text = "{"; return tok; }
        if (c == '}') { advance(); tok.kind = Tok::RBrace; tok.text = "}"; return tok; }
        if (c == '/') { advance(); tok.kind = Tok::Slash; tok.text = "/"; return tok; }
        if (c == ':') { advance(); tok.kind = Tok::Colon; tok.text = ":"; return tok; }
        if (c == '"') return lex_string(tok);
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' ||
            (c == '.' && pos_ + 1 < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
            return lex_number(tok);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return lex_ident(tok);
        throw ParseError(ParseError::Kind::Syntax, line_, col_,
                         std::string("unexpected character '") + c + "'");
    }

private:
    void advance() {
        if (text_[pos_] == '\n') {
            line_++;
            col_ = 1;
        } else {
            col_++;
        }
        pos_++;
    }

    void skip_ws_and_comments() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    Token lex_string(Token tok) {
        advance();  // opening quote
        tok.kind = Tok::String;
        while (pos_ < text_.size() && text_[pos_] != '"' && text_[pos_] != '\n') {
            tok.text += text_[pos_];
            advance();
        }
        if (pos_ >= text_.size() || text_[pos_] != '"') {
            throw ParseError(ParseError::Kind::Syntax, tok.line, tok.col, "unterminated string");
        }
        advance();  // closing quote
        return tok;
    }

    Token lex_number(Token tok) {
        tok.kind = Tok::Number;
        std::size_t start = pos_;
        if (text_[pos_] == '-' || text_[pos_] == '+') advance();
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
                text_[pos_] == 'e' || text_[pos_] == 'E' ||
                ((text_[pos_] == '-' || text_[pos_] == '+') &&
                 (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E')))) {
            advance();
        }
        tok.text = text_.substr(start, pos_ - start);
        const char* first = tok.text.data();
        const char* last = first + tok.text.size();
        auto [ptr, ec] = std::from_chars(first, last, tok.number);
        if (ec != std::errc() || ptr != last) {
            throw ParseError(ParseError::Kind::Syntax, tok.line, tok.col,
                             "malformed number '" + tok.text + "'");
        }
        return tok;
    }

    Token lex_ident(Token tok) {
        tok.kind = Tok::Ident;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            tok.text += text_[pos_];
            advance();
        }
        return tok;
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

const std::set<std::string> kTimeUnits = {"us", "ms", "s"};
const std::set<std::string> kSizeUnits = {"B", "KB", "MB", "GB", "TB"};
const std::set<std::string> kSpeedBases = {"KB", "MB", "GB"};

class Parser {
public:
    explicit Parser(const std::string& text) : lexer_(text) { cur_ = lexer_.next(); }

    ScenarioAst parse() {
        ScenarioAst ast;
        std::set<std::string> farm_names;
        std::set<std::string> workload_names;
        while (cur_.kind != Tok::End) {
            const std::string kw = expect_ident("block keyword");
            if (kw == "geoplex") {
                ast.blocks.push_back(parse_geoplex());
            } else if (kw == "farm") {
                auto farm = parse_farm();
                if (!farm_names.insert(farm.name).second) {
                    throw ParseError(ParseError::Kind::DuplicateBlockName, farm.pos.line,
                                     farm.pos.col, "duplicate farm \"" + farm.name + "\"");
                }
                ast.blocks.push_back(std::move(farm));
            } else if (kw == "workload") {
                auto wl = parse_workload();
                if (!workload_names.insert(wl.name).second) {
                    throw ParseError(ParseError::Kind::DuplicateBlockName, wl.pos.line, wl.pos.col,
                                     "duplicate workload \"" + wl.name + "\"");
                }
                ast.blocks.push_back(std::move(wl));
            } else if (kw == "inject") {
                ast.blocks.push_back(parse_inject());
            } else if (kw == "defaults") {
                ast.blocks.push_back(parse_defaults());
            } else {
                throw ParseError(ParseError::Kind::Syntax, prev_.line, prev_.col,
                                 "expected geoplex, farm, workload, inject or defaults; got '" +
                                     kw + "'");
            }
        }
        return ast;
    }

private:
    Token take() {
        prev_ = cur_;
        cur_ = lexer_.next();
        return prev_;
    }

    [[noreturn]] void fail(const std::string& expected) {
        throw ParseError(ParseError::Kind::Syntax, cur_.line, cur_.col,
                         "expected " + expected + ", got '" +
                             (cur_.kind == Tok::End ? "end of input" : cur_.text) + "'");
    }

    std::string expect_ident(const std::string& what) {
        if (cur_.kind != Tok::Ident) fail(what);
        return take().text;
    }

    std::string expect_keyword(const std::string& kw) {
        if (cur_.kind != Tok::Ident || cur_.text != kw) fail("'" + kw + "'");
        return take().text;
    }

    std::string expect_string(const std::string& what) {
        if (cur_.kind != Tok::String) fail(what);
        return take().text;
    }

    double expect_number(const std::string& what) {
        if (cur_.kind != Tok::Number) fail(what);
        return take().number;
    }

    std::uint64_t expect_integer(const std::string& what) {
        double v = expect_number(what);
        if (v < 0 || v != std::floor(v)) {
            throw ParseError(ParseError::Kind::Syntax, prev_.line, prev_.col,
                             what + " must be a non-negative integer");
        }
        return static_cast<std::uint64_t>(v);
    }

    void expect(Tok kind, const std::string& what) {
        if (cur_.kind != kind) fail(what);
        take();
    }

    bool peek_ident(const std::string& kw) const {
        return cur_.kind == Tok::Ident && cur_.text == kw;
    }

    std::string expect_one_of(std::initializer_list<const char*> options) {
        if (cur_.kind == Tok::Ident) {
            for (const char* opt : options) {
                if (cur_.text == opt) return take().text;
            }
        }
        std::string expected;
        for (const char* opt : options) {
            if (!expected.empty()) expected += " or ";
            expected += opt;
        }
        fail(expected);
    }

    Quantity quantity(const std::set<std::string>& units, const std::string& what) {
        Quantity q;
        q.value = expect_number(what);
        if (cur_.kind != Tok::Ident) fail("unit after " + what);
        if (!units.count(cur_.text)) {
            throw ParseError(ParseError::Kind::UnknownUnit, cur_.line, cur_.col,
                             "unknown unit '" + cur_.text + "' for " + what);
        }
        q.unit = take().text;
        return q;
    }

    Quantity speed_quantity(const std::string& what) {
        Quantity q;
        q.value = expect_number(what);
        if (cur_.kind != Tok::Ident || !kSpeedBases.count(cur_.text)) {
            throw ParseError(ParseError::Kind::UnknownUnit, cur_.line, cur_.col,
                             "unknown speed unit for " + what);
        }
        std::string base = take().text;
        expect(Tok::Slash, "'/' in speed unit");
        expect_keyword("s");
        q.unit = base + "/s";
        return q;
    }

    std::vector<std::string> path() {
        std::vector<std::string> segments;
        segments.push_back(expect_string("path segment"));
        while (cur_.kind == Tok::Slash) {
            take();
            segments.push_back(expect_string("path segment"));
        }
        return segments;
    }

    GeoplexBlock parse_geoplex() {
        GeoplexBlock block;
        block.pos = {prev_.line, prev_.col};
        expect(Tok::LBrace, "'{'");
        expect_keyword("mode");
        block.mode = expect_one_of({"active_active", "active_passive"});
        expect_keyword("farms");
        block.farms.push_back(expect_string("farm name"));
        while (cur_.kind == Tok::String) block.farms.push_back(take().text);
        expect(Tok::RBrace, "'}'");
        return block;
    }

    FarmBlock parse_farm() {
        FarmBlock block;
        block.name = expect_string("farm name");
        block.pos = {prev_.line, prev_.col};
        expect(Tok::LBrace, "'{'");
        while (!(cur_.kind == Tok::RBrace)) {
            expect_keyword("service");
            block.services.push_back(parse_service());
        }
        expect(Tok::RBrace, "'}'");
        return block;
    }

    ServiceBlock parse_service() {
        ServiceBlock block;
        block.name = expect_string("service name");
        block.pos = {prev_.line, prev_.col};
        expect(Tok::LBrace, "'{'");
        expect_keyword("kind");
        block.kind = expect_one_of({"racs", "raps"});
        while (cur_.kind != Tok::RBrace) {
            const std::string attr = expect_ident("service attribute");
            if (attr == "storage") {
                StorageAttr storage;
                storage.variant = expect_one_of({"shared_nothing", "shared_disk"});
                if (peek_ident("invalidation")) {
                    take();
                    storage.invalidation = quantity(kTimeUnits, "invalidation cost");
                }
                block.attrs.push_back(storage);
            } else if (attr == "clones") {
                block.attrs.push_back(ClonesAttr{expect_integer("clone count")});
            } else if (attr == "partitions") {
                block.attrs.push_back(PartitionsAttr{expect_integer("partition count")});
            } else if (attr == "buckets") {
                block.attrs.push_back(BucketsAttr{expect_integer("bucket count")});
            } else if (attr == "node") {
                block.attrs.push_back(parse_node());
            } else if (attr == "pack") {
                block.attrs.push_back(parse_pack());
            } else if (attr == "balancer") {
                BalancerAttr balancer;
                balancer.policy = expect_one_of({"round_robin", "least_queue", "sieve"});
                if (peek_ident("detect")) {
                    take();
                    balancer.detect = quantity(kTimeUnits, "detection delay");
                }
                block.attrs.push_back(balancer);
            } else if (attr == "forward") {
                block.attrs.push_back(ForwardAttr{expect_string("forward target")});
            } else if (attr == "state_size") {
                block.attrs.push_back(StateSizeAttr{quantity(kSizeUnits, "state size")});
            } else {
                throw ParseError(ParseError::Kind::Syntax, prev_.line, prev_.col,
                                 "unknown service attribute '" + attr + "'");
            }
        }
        expect(Tok::RBrace, "'}'");
        return block;
    }

    NodeBlock parse_node() {
        NodeBlock node;
        node.pos = {prev_.line, prev_.col};
        expect(Tok::LBrace, "'{'");
        expect_keyword("rate");
        node.rate = quantity({"rps"}, "node rate");
        expect_keyword("disk");
        node.disk = quantity(kSizeUnits, "disk size");
        if (peek_ident("raid")) {
            take();
            node.raid = expect_one_of({"none", "raid1", "raid5"});
        }
        expect(Tok::RBrace, "'}'");
        return node;
    }

    PackBlock parse_pack() {
        PackBlock pack;
        pack.pos = {prev_.line, prev_.col};
        expect(Tok::LBrace, "'{'");
        expect_keyword("size");
        pack.size = expect_integer("pack size");
        expect_keyword("mode");
        pack.mode = expect_one_of({"active_active", "active_passive"});
        expect_keyword("storage");
        pack.storage = expect_one_of({"shared_disk", "shared_nothing"});
        expect(Tok::RBrace, "'}'");
        return pack;
    }

    WorkloadBlock parse_workload() {
        WorkloadBlock block;
        block.name = expect_string("workload name");
        block.pos = {prev_.line, prev_.col};
        expect(Tok::LBrace, "'{'");
        expect_keyword("target");
        block.target = path();
        expect_keyword("arrival");
        block.arrival_kind = expect_one_of({"poisson", "fixed"});
        block.arrival_value = block.arrival_kind == "poisson"
                                  ? quantity({"rps"}, "arrival rate")
                                  : quantity(kTimeUnits, "arrival interval");
        expect_keyword("mix");
        expect_keyword("read");
        block.mix_read = expect_number("read weight");
        expect_keyword("write");
        block.mix_write = expect_number("write weight");
        expect_keyword("deadline");
        block.deadline = quantity(kTimeUnits, "deadline");
        expect_keyword("demand");
        block.demand = quantity(kTimeUnits, "demand");
        if (peek_ident("write_demand")) {
            take();
            block.write_demand = quantity(kTimeUnits, "write demand");
        }
        if (peek_ident("keys")) {
            take();
            block.keys = expect_integer("key space");
        }
        if (peek_ident("key_dist")) {
            take();
            block.key_dist = expect_one_of({"uniform", "zipf", "sequence"});
            if (*block.key_dist == "zipf") block.zipf_s = expect_number("zipf exponent");
        }
        if (peek_ident("start")) {
            take();
            block.start = quantity(kTimeUnits, "start");
        }
        expect_keyword("duration");
        block.duration = quantity(kTimeUnits, "duration");
        expect(Tok::RBrace, "'}'");
        return block;
    }

    InjectBlock parse_inject() {
        InjectBlock block;
        block.pos = {prev_.line, prev_.col};
        expect(Tok::LBrace, "'{'");
        while (cur_.kind != Tok::RBrace) {
            InjectAction action;
            expect_keyword("at");
            action.pos = {prev_.line, prev_.col};
            action.at = quantity(kTimeUnits, "inject time");
            expect(Tok::Colon, "':'");
            action.verb = expect_one_of({"fail", "repair", "add_clone", "add_partition"});
            if (action.verb == "fail" || action.verb == "repair") {
                action.target_kind = expect_one_of({"node", "disk", "site"});
            }
            action.path = path();
            block.actions.push_back(std::move(action));
        }
        expect(Tok::RBrace, "'}'");
        return block;
    }

    DefaultsBlock parse_defaults() {
        DefaultsBlock block;
        block.pos = {prev_.line, prev_.col};
        expect(Tok::LBrace, "'{'");
        while (cur_.kind != Tok::RBrace) {
            const std::string key = expect_ident("defaults entry");
            if (key == "seed") {
                block.seed = expect_integer("seed");
            } else if (key == "copy_rate") {
                block.copy_rate = speed_quantity("copy rate");
            } else if (key == "detect") {
                block.detect = quantity(kTimeUnits, "detect");
            } else if (key == "takeover") {
                block.takeover = quantity(kTimeUnits, "takeover");
            } else if (key == "geoplex_detect") {
                block.geoplex_detect = quantity(kTimeUnits, "geoplex_detect");
            } else if (key == "provision") {
                block.provision = quantity(kTimeUnits, "provision");
            } else if (key == "failback") {
                block.failback = expect_one_of({"none", "on_repair"});
            } else {
                throw ParseError(ParseError::Kind::Syntax, prev_.line, prev_.col,
                                 "unknown defaults entry '" + key + "'");
            }
        }
        expect(Tok::RBrace, "'}'");
        return block;
    }

    Lexer lexer_;
    Token cur_;
    Token prev_;
};

}  // namespace

ScenarioAst parse_scenario(const std::string& text) { return Parser(text).parse(); }

}  // namespace farmsim::scenario
