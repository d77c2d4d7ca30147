#include "ctclm/utf8.h"

#include <gtest/gtest.h>

using namespace ctclm;

TEST(Utf8, RoundTripsMixedScripts) {
  const std::string s = "aéদিন \U0001F600";
  const auto cps = DecodeUtf8(s);
  EXPECT_EQ(cps.size(), 7u);
  EXPECT_EQ(cps[2], U'দ');
  EXPECT_EQ(EncodeUtf8(cps), s);
}

TEST(Utf8, InvalidBytesBecomeReplacementChar) {
  const auto cps = DecodeUtf8("a\xff" "b\xe0\xa6");
  ASSERT_EQ(cps.size(), 4u);
  EXPECT_EQ(cps[1], U'�');
  EXPECT_EQ(cps[3], U'�');
}

TEST(Utf8, SplitWordsSkipsAllWhitespaceRuns) {
  const auto w = SplitWords("  a\tb   c\n");
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0], "a");
  EXPECT_EQ(w[2], "c");
  EXPECT_TRUE(SplitWords("   ").empty());
}
