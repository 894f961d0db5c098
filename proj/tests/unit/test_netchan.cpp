#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "nhil/netchan/agent.hpp"
#include "nhil/netchan/profile.hpp"
#include "nhil/netchan/random.hpp"
#include "nhil/netchan/scheduler.hpp"
#include "nhil/netchan/tap.hpp"
#include "nhil/netchan/transport.hpp"
#include "nhil/netchan/wire.hpp"
#include "oracles.hpp"

using namespace nhil;
using namespace nhil::oracle;

namespace {

ChannelProfile bernoulli_profile(double p, Nanos delay_ns)
{
    ChannelProfile profile;
    profile.name = "test";
    profile.link.delay_ns = delay_ns;
    profile.link.loss = BernoulliLoss{p};
    return profile;
}

DecodeErrorKind decode_error_of(const std::vector<std::uint8_t>& bytes)
{
    try {
        decode_message(bytes);
    } catch (const DecodeError& e) {
        return e.kind();
    }
    FAIL("decode accepted a bad buffer");
    return DecodeErrorKind::BadMagic;
}

std::filesystem::path temp_file(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "nhil_test_netchan";
    std::filesystem::create_directories(dir);
    return dir / name;
}

} // namespace

TEST_CASE("certain loss and deterministic delay")
{
    ChannelState state(1);
    const ChannelProfile lossy = bernoulli_profile(1.0, 5 * kNanosPerMilli);
    for (int i = 0; i < 1000; ++i) {
        CHECK(std::holds_alternative<Drop>(sample_channel(lossy, Direction::Command, state)));
    }
    const ChannelProfile fixed = bernoulli_profile(0.0, 10'000'000);
    for (int i = 0; i < 1000; ++i) {
        const auto out = sample_channel(fixed, Direction::Status, state);
        REQUIRE(std::holds_alternative<DeliverAfter>(out));
        CHECK(std::get<DeliverAfter>(out).extra_ns == 10'000'000);
    }
}

TEST_CASE("bernoulli drop rate stays inside the binomial band")
{
    constexpr int n = 100000;
    for (const double p : {0.0, 0.1, 0.5, 1.0}) {
        ChannelState state(derive_seed(7, static_cast<std::uint64_t>(p * 10)));
        const ChannelProfile profile = bernoulli_profile(p, 0);
        int drops = 0;
        for (int i = 0; i < n; ++i) {
            drops += std::holds_alternative<Drop>(sample_channel(profile, Direction::Command, state)) ? 1 : 0;
        }
        const double rate = static_cast<double>(drops) / n;
        if (p == 0.0 || p == 1.0) {
            CHECK(rate == p);
        } else {
            CHECK(std::abs(rate - p) <= 3 * binomial_sigma(p, n));
        }
    }
}

TEST_CASE("gilbert-elliott absorbing states")
{
    Rng rng(3);
    GilbertElliottParams good{0.0, 1.0, 0.0, 1.0};
    GeState s = GeState::Good;
    for (int i = 0; i < 10000; ++i) {
        const GeStep step = gilbert_elliott_step(s, good, rng);
        CHECK_FALSE(step.lose);
        s = step.state;
    }
    GilbertElliottParams bad{1.0, 0.0, 0.0, 1.0};
    s = GeState::Good;
    for (int i = 0; i < 10000; ++i) {
        const GeStep step = gilbert_elliott_step(s, bad, rng);
        CHECK(step.lose);
        CHECK(step.state == GeState::Bad);
        s = step.state;
    }
}

TEST_CASE("gilbert-elliott long-run loss matches the stationary rate")
{
    const std::vector<GilbertElliottParams> params{
        {1e-4, 0.1, 0.001, 1.0}, {1.6e-4, 0.02, 0.002, 1.0}, {0.05, 0.3, 0.01, 0.6}};
    for (const auto& g : params) {
        const double pi_bad = power_iteration_pi_bad(g);
        const double expected = pi_bad * g.loss_in_bad + (1 - pi_bad) * g.loss_in_good;
        CHECK(stationary_loss_rate(g) == doctest::Approx(expected).epsilon(1e-9));

        constexpr int n = 2'000'000;
        Rng rng(11);
        GeState s = GeState::Good;
        int lost = 0;
        for (int i = 0; i < n; ++i) {
            const GeStep step = gilbert_elliott_step(s, g, rng);
            lost += step.lose ? 1 : 0;
            s = step.state;
        }
        const double sigma = std::sqrt(ge_asymptotic_variance(g, pi_bad) / n);
        CHECK(std::abs(static_cast<double>(lost) / n - expected) <= 3 * sigma);
    }
}

TEST_CASE("golden wire vector")
{
    WireMessage m;
    m.robot_id = 0;
    m.seq = 7;
    m.send_time_ns = 1000;
    m.payload = EgmCtrlPayload{EgmCommand::Activate};
    const std::vector<std::uint8_t> golden{0x4E, 0x48, 0x4C, 0x31, 0x01, 0x04, 0x00, 0x00, 0x07, 0x00, 0x00,
                                           0x00, 0xE8, 0x03, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x01};
    CHECK(encode_message(m) == golden);
    CHECK(decode_message(golden) == m);
}

TEST_CASE("wire roundtrip on random messages")
{
    Rng rng(42);
    for (int i = 0; i < 10000; ++i) {
        const WireMessage m = random_message(rng);
        const auto bytes = encode_message(m);
        REQUIRE(decode_message(bytes) == m);
        CHECK(encode_message(decode_message(bytes)) == bytes);
    }
}

TEST_CASE("decode rejects malformed buffers with distinct kinds")
{
    WireMessage m;
    m.seq = 1;
    m.payload = CriticalPointPayload{3, 12};
    const auto good = encode_message(m);
    CHECK(good.size() == kHeaderSize + 8);

    auto bad_magic = good;
    bad_magic[0] = 0x00;
    CHECK(decode_error_of(bad_magic) == DecodeErrorKind::BadMagic);

    auto bad_version = good;
    bad_version[4] = 2;
    CHECK(decode_error_of(bad_version) == DecodeErrorKind::UnknownVersion);

    auto bad_type = good;
    bad_type[5] = 9;
    CHECK(decode_error_of(bad_type) == DecodeErrorKind::UnknownMsgType);

    CHECK(decode_error_of(std::vector<std::uint8_t>(good.begin(), good.begin() + 10)) == DecodeErrorKind::ShortBuffer);

    auto longer = good;
    longer.push_back(0);
    CHECK(decode_error_of(longer) == DecodeErrorKind::PayloadLengthMismatch);
    CHECK(decode_error_of(std::vector<std::uint8_t>(good.begin(), good.end() - 1)) ==
          DecodeErrorKind::PayloadLengthMismatch);

    WireMessage ctrl;
    ctrl.payload = EgmCtrlPayload{};
    auto bad_cmd = encode_message(ctrl);
    bad_cmd.back() = 7;
    CHECK(decode_error_of(bad_cmd) == DecodeErrorKind::InvalidPayloadValue);
}

TEST_CASE("scheduler releases events in (due, insertion) order")
{
    EventScheduler s;
    CHECK_FALSE(advance_scheduler(s).has_value());
    WireMessage m;
    m.seq = 0;
    s.schedule(5, m, 0);
    m.seq = 1;
    s.schedule(3, m, 0);
    m.seq = 2;
    s.schedule(3, m, 0);
    const auto a = advance_scheduler(s);
    const auto b = advance_scheduler(s);
    const auto c = advance_scheduler(s);
    REQUIRE((a && b && c));
    CHECK((a->due_ns == 3 && a->tie_seq == 1));
    CHECK((b->due_ns == 3 && b->tie_seq == 2));
    CHECK((c->due_ns == 5 && c->tie_seq == 0));
    CHECK(s.now() == 5);
    CHECK(s.empty());
}

TEST_CASE("scheduler pop sequence equals a stable sort")
{
    Rng rng(5);
    EventScheduler s;
    std::vector<std::pair<Nanos, std::uint32_t>> oracle;
    for (std::uint32_t i = 0; i < 10000; ++i) {
        const auto due = static_cast<Nanos>(rng.below(1000));
        WireMessage m;
        m.seq = i;
        s.schedule(due, m, 0);
        oracle.emplace_back(due, i);
    }
    std::stable_sort(oracle.begin(), oracle.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (const auto& [due, seq] : oracle) {
        const auto e = s.advance();
        REQUIRE(e);
        CHECK(e->due_ns == due);
        CHECK(e->message.seq == seq);
    }
}

TEST_CASE("emu_send schedules at now plus the drawn delay")
{
    EventScheduler s;
    ChannelState state(1);
    WireMessage m;
    CHECK(emu_send(s, 0, m, 1, bernoulli_profile(0, 50 * kNanosPerMilli), Direction::Command, state));
    const auto e = s.advance();
    REQUIRE(e);
    CHECK(e->due_ns == 50'000'000);

    // A later send with a smaller draw overtakes an earlier one.
    m.seq = 1;
    emu_send(s, 0, m, 1, bernoulli_profile(0, 10 * kNanosPerMilli), Direction::Command, state);
    m.seq = 2;
    emu_send(s, 1 * kNanosPerMilli, m, 1, bernoulli_profile(0, 1 * kNanosPerMilli), Direction::Command, state);
    const auto first = s.advance();
    const auto second = s.advance();
    REQUIRE((first && second));
    CHECK((first->message.seq == 2 && first->due_ns == 2'000'000));
    CHECK((second->message.seq == 1 && second->due_ns == 10'000'000));

    TapSink tap(TapSink::InMemory{});
    m.seq = 3;
    CHECK_FALSE(emu_send(s, 0, m, 1, bernoulli_profile(1, 0), Direction::Command, state, TapPoint{&tap, "ctl"}));
    CHECK(s.empty());
    CHECK(tap.sent() == 1);
    CHECK(tap.received() == 0);
}

TEST_CASE("emulated transport: fixed delay is exact and drops balance the tap")
{
    TapSink tap(TapSink::InMemory{});
    ChannelProfile p = bernoulli_profile(0.2, 7 * kNanosPerMilli);
    EmulatedTransport t(p, 9, &tap);
    std::vector<Delivery> got;
    for (std::uint32_t i = 1; i <= 2000; ++i) {
        WireMessage m;
        m.seq = i;
        m.payload = CriticalPointPayload{1, static_cast<std::int32_t>(i)};
        const Nanos now = static_cast<Nanos>(i) * kNanosPerMilli;
        m.send_time_ns = static_cast<std::uint64_t>(now);
        t.send(i % 2 ? Direction::Command : Direction::Status, m, now);
        std::vector<Delivery> step;
        t.collect(now, step);
        got.insert(got.end(), step.begin(), step.end());
    }
    std::vector<Delivery> rest;
    t.collect(10 * kNanosPerSecond, rest);
    got.insert(got.end(), rest.begin(), rest.end());
    for (const Delivery& d : got) {
        CHECK(d.t_ns - static_cast<Nanos>(d.message.send_time_ns) == 7 * kNanosPerMilli);
    }
    const auto& c = t.counters();
    const std::uint64_t dropped = c.dropped[0] + c.dropped[1];
    CHECK(tap.sent() - tap.received() == dropped);
    CHECK(got.size() == 2000 - dropped);
}

TEST_CASE("emulated transport is deterministic per seed")
{
    const auto run = [](std::uint64_t seed) {
        ChannelProfile p = *named_profile("wifi6-long");
        EmulatedTransport t(p, seed);
        std::vector<std::pair<std::uint32_t, Nanos>> out;
        for (std::uint32_t i = 1; i <= 5000; ++i) {
            WireMessage m;
            m.seq = i;
            t.send(Direction::Command, m, static_cast<Nanos>(i) * 8'000'000);
            std::vector<Delivery> step;
            t.collect(static_cast<Nanos>(i) * 8'000'000, step);
            for (const auto& d : step) {
                out.emplace_back(d.message.seq, d.t_ns);
            }
        }
        return out;
    };
    CHECK(run(4) == run(4));
    CHECK(run(4) != run(5));
}

TEST_CASE("profiles: named set, json roundtrip, validation")
{
    for (const std::string& name : named_profile_names()) {
        const auto p = named_profile(name);
        REQUIRE(p);
        CHECK(p->name == name);
        CHECK_NOTHROW(p->validate());
        CHECK(profile_from_json(profile_to_json(*p)) == *p);
    }
    const auto long_range = *named_profile("wifi6-long");
    CHECK(mean_delay_ns(long_range.link) == doctest::Approx(8e6));
    CHECK(mean_loss_rate(long_range.link.loss) == doctest::Approx(0.01).epsilon(0.05));
    const auto iid = iid_equivalent(long_range);
    CHECK(std::holds_alternative<BernoulliLoss>(iid.link.loss));
    CHECK(mean_loss_rate(iid.link.loss) == doctest::Approx(mean_loss_rate(long_range.link.loss)));
    CHECK(mean_delay_ns(iid.link) == doctest::Approx(mean_delay_ns(long_range.link)));

    ChannelProfile bad = bernoulli_profile(1.5, 0);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = bernoulli_profile(0.1, -1);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_THROWS(load_profile("/nonexistent/profile.json"));

    const ChannelProfile s = static_profile(0.1, 50);
    CHECK(s.link.delay_ns == 50 * kNanosPerMilli);
    CHECK(std::get<BernoulliLoss>(s.link.loss).p == 0.1);
}

TEST_CASE("tap files roundtrip")
{
    const auto file = temp_file("three.csv");
    {
        TapSink sink(file);
        tap_append(sink, TapRecord{"a", TapDirection::Send, MsgType::CriticalPoint, 2, 10, 100});
        tap_append(sink, TapRecord{"b", TapDirection::Recv, MsgType::RobotStatus, 3, 11, 200});
        tap_append(sink, TapRecord{"b", TapDirection::Recv, std::nullopt, 0, 0, 300});
    }
    const auto back = load_tap(file);
    REQUIRE(back.size() == 3);
    CHECK(back[0] == TapRecord{"a", TapDirection::Send, MsgType::CriticalPoint, 2, 10, 100});
    CHECK_FALSE(back[2].msg_type.has_value());

    const auto empty = temp_file("empty.csv");
    std::ofstream(empty).close();
    CHECK(load_tap(empty).empty());

    const auto big = temp_file("big.csv");
    std::vector<TapRecord> written;
    {
        TapSink sink(big);
        for (std::uint32_t i = 0; i < 10000; ++i) {
            TapRecord r{"ep", i % 3 ? TapDirection::Send : TapDirection::Recv, MsgType::EgmJoints, 1, i,
                        static_cast<Nanos>(i) * 8'000'000};
            sink.append(r);
            written.push_back(r);
        }
    }
    CHECK(load_tap(big) == written);

    const auto broken = temp_file("broken.csv");
    {
        std::ofstream out(broken);
        out << kTapHeader << "\nep,send,CRITICAL_POINT,1,1,5\nep,sideways,CRITICAL_POINT,1,2,6\n";
    }
    try {
        load_tap(broken);
        FAIL("expected a parse error");
    } catch (const TapParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("rng draws are reproducible")
{
    Rng a(123);
    Rng b(123);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    CHECK(derive_seed(1, 1) != derive_seed(1, 2));
    CHECK(derive_seed(1, 1) == derive_seed(1, 1));
    Rng c(9);
    double sum = 0;
    for (int i = 0; i < 100000; ++i) {
        const auto k = c.below(10);
        CHECK(k < 10);
        sum += c.exponential(2.0);
    }
    CHECK(sum / 100000 == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("forward agent passes datagrams through byte for byte")
{
    TapSink agent_tap(TapSink::InMemory{});
    UdpSocket sink_socket(parse_endpoint("127.0.0.1:0"));
    ForwardAgent agent(parse_endpoint("127.0.0.1:0"), sink_socket.local_endpoint(), agent_tap, "agent");
    UdpSocket sender(parse_endpoint("127.0.0.1:0"));
    std::jthread worker([&](std::stop_token st) { agent.run(st); });

    Rng rng(8);
    std::vector<std::vector<std::uint8_t>> sent;
    std::vector<std::vector<std::uint8_t>> received;
    std::vector<std::uint8_t> buffer(65536);
    for (int i = 0; i < 1000; ++i) {
        WireMessage m = random_message(rng);
        m.seq = static_cast<std::uint32_t>(i);
        sent.push_back(encode_message(m));
        sender.send_to(agent.listen_endpoint(), sent.back());
        if (const auto n = sink_socket.receive(buffer, std::chrono::seconds(2))) {
            received.emplace_back(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(*n));
        }
    }
    std::vector<std::uint8_t> corrupted{0xde, 0xad, 0xbe, 0xef};
    sender.send_to(agent.listen_endpoint(), corrupted);
    const auto n = sink_socket.receive(buffer, std::chrono::seconds(2));
    worker.request_stop();
    worker.join();

    CHECK(received == sent);
    REQUIRE(n);
    CHECK(std::vector<std::uint8_t>(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(*n)) == corrupted);
    const auto records = agent_tap.records();
    CHECK(records.size() == 2002);
    CHECK_FALSE(records.back().msg_type.has_value());
    CHECK(agent.forwarded() == 1001);
}

TEST_CASE("impairment proxy with certain loss forwards nothing")
{
    TapSink tap(TapSink::InMemory{});
    UdpSocket sink_socket(parse_endpoint("127.0.0.1:0"));
    ProxyConfig cfg;
    cfg.listen = parse_endpoint("127.0.0.1:0");
    cfg.forward = sink_socket.local_endpoint();
    cfg.plr = 1.0;
    ImpairmentProxy proxy(cfg, tap, "proxy");
    UdpSocket sender(parse_endpoint("127.0.0.1:0"));
    std::jthread worker([&](std::stop_token st) { proxy.run(st); });
    WireMessage m;
    for (std::uint32_t i = 0; i < 200; ++i) {
        m.seq = i;
        sender.send_to(proxy.listen_endpoint(), encode_message(m));
    }
    std::vector<std::uint8_t> buffer(65536);
    CHECK_FALSE(sink_socket.receive(buffer, std::chrono::milliseconds(300)).has_value());
    worker.request_stop();
    worker.join();
    CHECK(proxy.forwarded() == 0);
    CHECK(proxy.dropped() == 200);
    CHECK(tap.received() == 200);
    CHECK(tap.sent() == 0);
}
