#include <gtest/gtest.h>

#include "spoofchain/unicode.hpp"

using namespace spoofchain::unicode;

TEST(Idn, PunycodeRoundTrip) {
  // xn--aypal-uye is U+0440 (Cyrillic er) followed by "aypal"
  EXPECT_EQ(idn_to_unicode("xn--aypal-uye.com"), "\xD1\x80" "aypal.com");
  EXPECT_EQ(idn_to_ascii("\xD1\x80" "aypal.com"), "xn--aypal-uye.com");
  EXPECT_EQ(idn_to_unicode("paypal.com"), "paypal.com");
}

TEST(Skeleton, CyrillicLookalikeMatches) {
  EXPECT_TRUE(confusable("\xD1\x80" "aypal.com", "paypal.com"));
  EXPECT_TRUE(confusable("Alice@a.com", "alice@a.com"));
  EXPECT_FALSE(confusable("paypal.com", "paypa.com"));
  EXPECT_TRUE(confusable("al\xE2\x80\x8Bice", "alice"));
}

TEST(Script, MixedLabel) {
  EXPECT_TRUE(mixed_script("\xD1\x80" "aypal"));
  EXPECT_FALSE(mixed_script("paypal"));
  EXPECT_FALSE(mixed_script("\xD0\xBF\xD1\x80\xD0\xB8"));  // all Cyrillic
  EXPECT_FALSE(mixed_script("a-1"));
}

TEST(Bidi, OverrideWithNestedLtr) {
  // RLO "moc.a@" LRO "alice"
  std::string payload = "\xE2\x80\xAEmoc.a@\xE2\x80\xAD" "alice";
  EXPECT_TRUE(has_bidi_controls(payload));
  EXPECT_EQ(bidi_visual(payload), "alice@a.com");
  EXPECT_EQ(strip_format(payload), "moc.a@alice");
}

TEST(Bidi, PopAndPlain) {
  EXPECT_EQ(bidi_visual("ab\xE2\x80\xAE" "cde\xE2\x80\xAC" "fg"), "abedcfg");
  EXPECT_EQ(bidi_visual("plain"), "plain");
  EXPECT_FALSE(has_bidi_controls("plain"));
}

TEST(Substitute, FirstLookalike) {
  EXPECT_EQ(substitute_confusable("paypal"), "\xD1\x80" "aypal");
  EXPECT_FALSE(substitute_confusable("1234"));
}
