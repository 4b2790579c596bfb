// Copyright 2026 The qfuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qfuse/provider.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fixtures.hpp"

namespace qfuse {
namespace {

using nlohmann::json;
using testing::error_code_of;

// Sidecar stand-in on an ephemeral localhost port.
class MockSidecar {
 public:
  using Handler = std::function<void(const json& body, httplib::Response& res)>;

  MockSidecar(Handler embed, Handler generate) {
    server_.Post("/v1/embed", [this, embed](const httplib::Request& req, httplib::Response& res) {
      ++embed_calls;
      record(req.body);
      embed(json::parse(req.body), res);
    });
    server_.Post("/v1/generate",
                 [this, generate](const httplib::Request& req, httplib::Response& res) {
                   ++generate_calls;
                   record(req.body);
                   generate(json::parse(req.body), res);
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockSidecar() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::vector<json> bodies() {
    std::lock_guard lock(mu_);
    return bodies_;
  }

  std::atomic<int> embed_calls{0};
  std::atomic<int> generate_calls{0};

 private:
  void record(const std::string& body) {
    std::lock_guard lock(mu_);
    bodies_.push_back(json::parse(body));
  }

  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mu_;
  std::vector<json> bodies_;
};

// Embeds text t as [len(t), first byte, 1].
void echo_embed(const json& body, httplib::Response& res) {
  json vectors = json::array();
  for (const auto& t : body["texts"]) {
    const auto s = t.get<std::string>();
    vectors.push_back({static_cast<double>(s.size()), static_cast<double>(s[0]), 1.0});
  }
  res.set_content(json{{"dim", 3}, {"vectors", vectors}}.dump(), "application/json");
}

void no_generate(const json&, httplib::Response& res) { res.status = 404; }

HttpProviderOptions options_for(const MockSidecar& s) {
  HttpProviderOptions o;
  o.endpoint = s.endpoint();
  o.initial_backoff = std::chrono::milliseconds(1);
  o.timeout = std::chrono::seconds(5);
  return o;
}

std::vector<std::string> texts(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(i + 1, static_cast<char>('a' + i)));
  return out;
}

TEST(HttpProviderTest, EmbedBatchesAndPreservesOrder) {
  MockSidecar sidecar(echo_embed, no_generate);
  auto o = options_for(sidecar);
  o.batch_size = 3;
  o.max_in_flight = 2;
  HttpProvider p(o);
  const auto in = texts(10);
  const auto out = p.embed_batch(in);
  ASSERT_EQ(out.size(), 10u);
  for (std::size_t i = 0; i < in.size(); ++i) {
    EXPECT_EQ(out[i][0], static_cast<float>(in[i].size()));
    EXPECT_EQ(out[i][1], static_cast<float>(in[i][0]));
  }
  EXPECT_EQ(sidecar.embed_calls.load(), 4);
  for (const auto& b : sidecar.bodies()) EXPECT_LE(b["texts"].size(), 3u);
}

TEST(HttpProviderTest, RetriesServerErrorsThenSucceeds) {
  std::atomic<int> failures{2};
  MockSidecar sidecar(
      [&](const json& body, httplib::Response& res) {
        if (failures-- > 0) {
          res.status = 503;
          return;
        }
        echo_embed(body, res);
      },
      no_generate);
  HttpProvider p(options_for(sidecar));
  const auto in = texts(2);
  EXPECT_EQ(p.embed_batch(in).size(), 2u);
  EXPECT_EQ(sidecar.embed_calls.load(), 3);
}

TEST(HttpProviderTest, GivesUpAfterMaxAttempts) {
  MockSidecar sidecar([](const json&, httplib::Response& res) { res.status = 500; }, no_generate);
  auto o = options_for(sidecar);
  o.max_attempts = 3;
  HttpProvider p(o);
  const auto in = texts(1);
  EXPECT_EQ(error_code_of([&] { p.embed_batch(in); }), ErrorCode::kBackendUnavailable);
  EXPECT_EQ(sidecar.embed_calls.load(), 3);
}

TEST(HttpProviderTest, ClientErrorsAreNotRetried) {
  MockSidecar sidecar([](const json&, httplib::Response& res) { res.status = 422; }, no_generate);
  HttpProvider p(options_for(sidecar));
  const auto in = texts(1);
  EXPECT_EQ(error_code_of([&] { p.embed_batch(in); }), ErrorCode::kBadResponse);
  EXPECT_EQ(sidecar.embed_calls.load(), 1);
}

TEST(HttpProviderTest, RejectsMalformedEmbedResponses) {
  const std::vector<std::string> bodies{
      "not json",
      R"({"vectors":[[1,2,3]]})",
      R"({"dim":3,"vectors":[]})",
      R"({"dim":3,"vectors":[[1,2]]})",
      R"({"dim":3,"vectors":[[1,"x",3]]})",
  };
  for (const auto& body : bodies) {
    MockSidecar sidecar(
        [&](const json&, httplib::Response& res) { res.set_content(body, "application/json"); },
        no_generate);
    HttpProvider p(options_for(sidecar));
    const auto in = texts(1);
    EXPECT_EQ(error_code_of([&] { p.embed_batch(in); }), ErrorCode::kBadResponse) << body;
  }
}

TEST(HttpProviderTest, UnreachableEndpoint) {
  HttpProviderOptions o;
  {
    // Grab a free port, then release it so nothing listens there.
    httplib::Server s;
    o.endpoint = "http://127.0.0.1:" + std::to_string(s.bind_to_any_port("127.0.0.1"));
  }
  o.max_attempts = 2;
  o.initial_backoff = std::chrono::milliseconds(1);
  o.timeout = std::chrono::seconds(2);
  HttpProvider p(o);
  const auto in = texts(1);
  EXPECT_EQ(error_code_of([&] { p.embed_batch(in); }), ErrorCode::kBackendUnavailable);
}

TEST(HttpProviderTest, GenerateWireFormat) {
  MockSidecar sidecar(echo_embed, [](const json& body, httplib::Response& res) {
    json out = json::array();
    out.push_back({{"text", "what is x?"}, {"gen_prob", 0.5}, {"bertscore_f1", 0.9}});
    if (body["num_sequences"].get<int>() > 1) out.push_back({{"text", "why?"}, {"gen_prob", 1.0}});
    res.set_content(out.dump(), "application/json");
  });
  auto o = options_for(sidecar);
  o.decoding = "nucleus";
  HttpProvider p(o);
  const auto set = InstructionSet::defaults();
  const GenerationRequest req("Read the passage and generate a question.", "Passage text.", 2, 32,
                              set);
  const auto out = p.generate(req);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].text(), "what is x?");
  EXPECT_DOUBLE_EQ(out[0].gen_prob(), 0.5);
  EXPECT_EQ(out[0].bertscore_f1(), 0.9);
  EXPECT_FALSE(out[1].bertscore_f1().has_value());

  const auto bodies = sidecar.bodies();
  ASSERT_EQ(bodies.size(), 1u);
  EXPECT_EQ(bodies[0]["instruction"], "Read the passage and generate a question.");
  EXPECT_EQ(bodies[0]["passage"], "Passage text.");
  EXPECT_EQ(bodies[0]["num_sequences"], 2);
  EXPECT_EQ(bodies[0]["max_new_tokens"], 32);
  EXPECT_EQ(bodies[0]["strategy"], "nucleus");
}

TEST(HttpProviderTest, RejectsMalformedGenerateResponses) {
  const std::vector<std::string> bodies{
      R"({"text":"x","gen_prob":0.5})",
      R"([{"text":"x"}])",
      R"([{"text":"x","gen_prob":0.0}])",
      R"([{"text":"x","gen_prob":1.5}])",
      R"([{"text":"x","gen_prob":0.5,"bertscore_f1":2}])",
      R"([{"text":"a","gen_prob":0.5},{"text":"b","gen_prob":0.5}])",
  };
  const auto set = InstructionSet::defaults();
  for (const auto& body : bodies) {
    MockSidecar sidecar(echo_embed, [&](const json&, httplib::Response& res) {
      res.set_content(body, "application/json");
    });
    HttpProvider p(options_for(sidecar));
    const GenerationRequest req("Read the passage and summarize keywords.", "P.", 1, 8, set);
    EXPECT_EQ(error_code_of([&] { p.generate(req); }), ErrorCode::kBadResponse) << body;
  }
}

TEST(HttpProviderTest, RejectsBadOptionsAndInputs) {
  HttpProviderOptions o;
  o.batch_size = 0;
  EXPECT_EQ(error_code_of([&] { HttpProvider p(o); }), ErrorCode::kInvalidArgument);
  HttpProvider p(HttpProviderOptions{});
  const std::vector<std::string> none;
  const std::vector<std::string> blank{""};
  EXPECT_EQ(error_code_of([&] { p.embed_batch(none); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(error_code_of([&] { p.embed_batch(blank); }), ErrorCode::kInvalidArgument);
}

TEST(GenerationRequestTest, InstructionWhitelist) {
  const auto set = InstructionSet::defaults();
  EXPECT_EQ(error_code_of([&] { GenerationRequest("Write a poem.", "P.", 1, 8, set); }),
            ErrorCode::kInvalidArgument);
  EXPECT_FALSE(error_code_of([&] { GenerationRequest("Write a poem.", "P.", 1, 8, set, true); }));
  EXPECT_EQ(error_code_of([&] {
              GenerationRequest("Read the passage and summarize keywords.", "P.", 0, 8, set);
            }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(set.kind_of("Read the passage and summarize keywords."), QueryKind::kKeywords);
  EXPECT_EQ(set.kind_of("Read the passage and generate a question."), QueryKind::kQuestion);
}

TEST(HashProviderTest, DeterministicUnitVectors) {
  HashProvider p(32, 5);
  const std::vector<std::string> in{"alpha", "beta", "alpha"};
  const auto a = p.embed_batch(in);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0], a[2]);
  EXPECT_NE(a[0], a[1]);
  for (const auto& v : a) {
    EXPECT_EQ(v.dim(), 32u);
    EXPECT_NEAR(v.norm(), 1.0, 1e-6);
  }
  EXPECT_NE(HashProvider::hash_embedding("alpha", 32, 6), a[0]);
  EXPECT_EQ(HashProvider::hash_embedding("alpha", 32, 5), a[0]);
}

TEST(HashProviderTest, MatchesGoldenValues) {
  const json golden =
      json::parse(testing::read_file(testing::source_dir() / "data/golden/hash_embeddings.json"));
  const auto dim = golden["dim"].get<std::size_t>();
  const auto seed = golden["seed"].get<std::uint64_t>();
  ASSERT_FALSE(golden["entries"].empty());
  for (const auto& e : golden["entries"]) {
    const auto v = HashProvider::hash_embedding(e["text"].get<std::string>(), dim, seed);
    const auto& prefix = e["prefix"];
    for (std::size_t i = 0; i < prefix.size(); ++i) {
      EXPECT_EQ(v[i], prefix[i].get<float>()) << e["text"] << " component " << i;
    }
  }
}

TEST(HashProviderTest, GenerateEchoesFixtureByKind) {
  SyntheticSet fixture;
  fixture["p"].emplace_back(QueryKind::kQuestion, "q1?", 0.5);
  fixture["p"].emplace_back(QueryKind::kKeywords, "k1", 0.4);
  fixture["p"].emplace_back(QueryKind::kQuestion, "q2?", 0.3, false, 0.7);
  HashProvider p(8, 1, fixture);
  const auto set = InstructionSet::defaults();
  const auto qs = p.generate(
      GenerationRequest("Read the passage and generate a question.", "P.", 5, 8, set, false, "p"));
  ASSERT_EQ(qs.size(), 2u);
  EXPECT_EQ(qs[1].text(), "q2?");
  EXPECT_EQ(qs[1].bertscore_f1(), 0.7);
  EXPECT_EQ(p.generate(GenerationRequest("Read the passage and generate a question.", "P.", 1, 8,
                                         set, false, "p"))
                .size(),
            1u);
  EXPECT_TRUE(p.generate(GenerationRequest("Read the passage and generate a question.", "P.", 1, 8,
                                           set, false, "other"))
                  .empty());
  HashProvider bare(8, 1);
  EXPECT_EQ(error_code_of([&] {
              bare.generate(GenerationRequest("Read the passage and generate a question.", "P.",
                                              1, 8, set));
            }),
            ErrorCode::kBackendUnavailable);
}

}  // namespace
}  // namespace qfuse
