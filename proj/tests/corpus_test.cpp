#include <gtest/gtest.h>

#include <filesystem>

#include "spoofchain/corpus.hpp"
#include "spoofchain/error.hpp"

using namespace spoofchain;

namespace {

Bindings base() { return {}; }

std::string from_value(const RawMessage& m) {
  auto parse = parse_header_block(m.header_block, QuirkProfile{});
  auto named = parse.named("From");
  return named.empty() ? std::string{} : named.back()->raw_value;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::io;
}

}  // namespace

TEST(Corpus, A14RightToLeftPayload) {
  auto c = generate(AttackId::A14, base());
  ASSERT_EQ(c.messages.size(), 1u);
  EXPECT_NE(c.messages[0].header_block.find("\xE2\x80\xAEmoc.a@\xE2\x80\xAD" "alice"), std::string::npos);
  EXPECT_EQ(c.model, std::vector{AttackModel::direct_mta});
}

TEST(Corpus, A13ExtraAt) {
  auto c = generate(AttackId::A13, {"admin@gmail.com", "Oscar@attack.com", "Bob@b.com"});
  EXPECT_NE(from_value(c.messages[0]).find("admin@gm@ail.com"), std::string::npos);
  EXPECT_EQ(c.messages[0].mail_from, "Oscar@ail.com");
}

TEST(Corpus, A12Homograph) {
  auto c = generate(AttackId::A12, {"admin@paypal.com", "Oscar@attack.com", "Bob@b.com"});
  EXPECT_NE(from_value(c.messages[0]).find("admin@xn--aypal-uye.com"), std::string::npos);
  EXPECT_EQ(c.messages[0].mail_from, "Oscar@xn--aypal-uye.com");
}

TEST(Corpus, A3HasEmptyMailFrom) {
  auto c = generate(AttackId::A3, {"Alice@c.com", "Oscar@attack.com", "Bob@b.com"});
  EXPECT_FALSE(c.messages[0].mail_from.has_value());
  EXPECT_EQ(c.messages[0].helo_domain, "c.com");
  Knobs k;
  k.mail_from = "x@attack.com";
  EXPECT_EQ(code_of([&] { generate(AttackId::A3, base(), k); }), ErrorCode::unsupported_knob);
}

TEST(Corpus, SharedModelEnvelopes) {
  auto a1 = generate(AttackId::A1, base());
  EXPECT_EQ(a1.messages[0].auth_username, "Oscar@attack.com");
  EXPECT_EQ(a1.messages[0].mail_from, "Alice@a.com");
  auto a2 = generate(AttackId::A2, base());
  EXPECT_EQ(a2.messages[0].mail_from, "Oscar@attack.com");
  EXPECT_EQ(a2.model, std::vector{AttackModel::shared_mta});
}

TEST(Corpus, A4SecondFromFieldNames) {
  for (int v = 0; v < variant_count(AttackId::A4); ++v) {
    Knobs k;
    k.variant = v;
    auto c = generate(AttackId::A4, base(), k);
    auto parse = parse_header_block(c.messages[0].header_block, QuirkProfile{});
    EXPECT_EQ(parse.named("From").size(), 2u) << v;
  }
}

TEST(Corpus, IncompatibleCombinations) {
  EXPECT_EQ(code_of([] { combine({AttackId::A1, AttackId::A1}, base()); }), ErrorCode::incompatible_combination);
  EXPECT_EQ(code_of([] { combine({AttackId::A1, AttackId::A2}, base()); }), ErrorCode::incompatible_combination);
  EXPECT_EQ(code_of([] { combine({AttackId::A9, AttackId::A10}, base()); }), ErrorCode::incompatible_combination);
  EXPECT_EQ(code_of([] { combine({AttackId::A12, AttackId::A13}, base()); }), ErrorCode::incompatible_combination);
  EXPECT_EQ(code_of([] { combine({AttackId::A1, AttackId::A3}, base()); }), ErrorCode::incompatible_combination);
}

TEST(Corpus, VariantOutOfRange) {
  Knobs k;
  k.variant = 9;
  EXPECT_EQ(code_of([&] { generate(AttackId::A6, base(), k); }), ErrorCode::unsupported_knob);
}

TEST(Corpus, A11NeedsForwarderAccount) {
  EXPECT_EQ(code_of([] { generate(AttackId::A11, base()); }), ErrorCode::unsupported_knob);
}

TEST(Corpus, Case2Shape) {
  auto c = forwarding_case();
  ASSERT_EQ(c.messages.size(), 2u);
  EXPECT_FALSE(c.messages[0].mail_from.has_value());
  EXPECT_EQ(c.messages[0].rcpt_to, std::vector<std::string>{"Oscar@aliyun.com"});
  EXPECT_EQ(c.messages[1].mail_from, "Oscar@attack.com");
  EXPECT_EQ(c.messages[1].rcpt_to, std::vector<std::string>{"Bob@b.com"});
  ASSERT_TRUE(c.forward);
  EXPECT_TRUE(c.forward->resend);
  EXPECT_EQ(c.name(), "A2+A3+A10");
}

TEST(Corpus, WitnessesCarryExpectations) {
  for (auto id : all_attack_ids()) {
    auto c = witness_case(id);
    EXPECT_TRUE(c.expectations.contains(witness(id).scenario)) << to_string(id);
    EXPECT_TRUE(c.expectations.contains("strict-rfc"));
    EXPECT_FALSE(c.expectations.at("strict-rfc").success);
  }
}

TEST(Corpus, Deterministic) {
  EXPECT_EQ(generate(AttackId::A5, base()).messages, generate(AttackId::A5, base()).messages);
  Knobs k;
  k.seed = 7;
  EXPECT_NE(generate(AttackId::A5, base()).messages, generate(AttackId::A5, base(), k).messages);
}

TEST(Mutate, RepeatHeader) {
  auto m = generate(AttackId::A2, base()).messages[0];
  auto out = mutate(m, Mutation::repeat_header, "Subject");
  EXPECT_EQ(parse_header_block(out.header_block, QuirkProfile{}).named("Subject").size(), 2u);
}

TEST(Mutate, InsertSpaceAndUnicode) {
  auto m = generate(AttackId::A2, base()).messages[0];
  EXPECT_NE(mutate(m, Mutation::insert_space, "From").header_block.find("From :"), std::string::npos);
  auto u = mutate(m, Mutation::insert_unicode, "From", 3);
  EXPECT_NE(u.header_block, m.header_block);
  EXPECT_EQ(parse_header_block(u.header_block, QuirkProfile{}).named("From").size(), 1u);
}

TEST(Mutate, EncodeWordDecodesBack) {
  auto m = generate(AttackId::A2, base()).messages[0];
  auto out = mutate(m, Mutation::encode_word, "From");
  EXPECT_NE(out.header_block.find("=?utf-8?b?"), std::string::npos);
  EXPECT_EQ(extract_from_identity(out, QuirkProfile{}, IdentityPurpose::auth).selected->address(), "Alice@a.com");
}

TEST(Mutate, CaseVaryAlwaysChanges) {
  auto m = generate(AttackId::A2, base()).messages[0];
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto out = mutate(m, Mutation::case_vary, "from", seed);
    EXPECT_NE(out.header_block, m.header_block) << seed;
  }
}

TEST(Mutate, MissingLocus) {
  auto m = generate(AttackId::A2, base()).messages[0];
  EXPECT_EQ(code_of([&] { mutate(m, Mutation::repeat_header, "Reply-To"); }), ErrorCode::locus_not_found);
}

TEST(Corpus, ExportImportRoundTrip) {
  auto dir = std::filesystem::temp_directory_path() / "spoofchain_corpus_test";
  std::filesystem::remove_all(dir);
  std::vector<AttackCase> cases;
  for (auto id : all_attack_ids()) cases.push_back(witness_case(id));
  Knobs nul;
  nul.variant = 3;
  cases.push_back(generate(AttackId::A6, base(), nul));
  cases.push_back(forwarding_case());
  export_corpus(dir, cases);
  auto back = import_corpus(dir);
  ASSERT_EQ(back.size(), cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    EXPECT_EQ(back[i].ids, cases[i].ids);
    EXPECT_EQ(back[i].messages, cases[i].messages) << cases[i].name();
    EXPECT_EQ(back[i].expectations.size(), cases[i].expectations.size());
    EXPECT_EQ(back[i].forward.has_value(), cases[i].forward.has_value());
  }
  std::filesystem::remove_all(dir);
}
