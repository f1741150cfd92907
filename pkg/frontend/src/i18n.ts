/*
 * UI chrome strings, en and ja, selected once from the browser locale.
 * Answer text never comes from here: everything a turn displays as the
 * answer is the verbatim server payload.
 */

export type UiLocale = "en" | "ja";

interface Strings {
  appTitle: string;
  inputPlaceholder: string;
  send: string;
  modeRetrieval: string;
  modeInstructional: string;
  referencesLabel: string;
  manualsTitle: string;
  dashboardTitle: string;
  refusalBreakdown: string;
  rubricTitle: string;
  utilityLabel: string;
  safetyLabel: string;
  evaluatorsLabel: string;
  rankTest: string;
  rankTestOmitted: string;
  emptyDashboard: string;
  emptyManuals: string;
  requestFailed: string;
  retry: string;
  dismiss: string;
  safetyNoticeTitle: string;
  sectionCount: (n: number) => string;
  versionLabel: (v: number) => string;
}

const EN: Strings = {
  appTitle: "Lab Assistant",
  inputPlaceholder: "Ask about the procedure...",
  send: "Send",
  modeRetrieval: "Quick answer",
  modeInstructional: "Advisory",
  referencesLabel: "References",
  manualsTitle: "Manuals",
  dashboardTitle: "Evaluation",
  refusalBreakdown: "Refusal breakdown",
  rubricTitle: "Rubric means",
  utilityLabel: "Utility",
  safetyLabel: "Safety",
  evaluatorsLabel: "evaluators",
  rankTest: "Rank test",
  rankTestOmitted: "Rank test omitted",
  emptyDashboard: "No evaluation report loaded.",
  emptyManuals: "No manuals ingested.",
  requestFailed: "Request failed.",
  retry: "Retry",
  dismiss: "Dismiss",
  safetyNoticeTitle: "Safety notice",
  sectionCount: (n) => `${n} sections`,
  versionLabel: (v) => `v${v}`,
};

const JA: Strings = {
  appTitle: "実験アシスタント",
  inputPlaceholder: "手順について質問してください...",
  send: "送信",
  modeRetrieval: "クイック回答",
  modeInstructional: "アドバイザリ",
  referencesLabel: "参照",
  manualsTitle: "マニュアル",
  dashboardTitle: "評価",
  refusalBreakdown: "拒否分類の内訳",
  rubricTitle: "ルーブリック平均",
  utilityLabel: "有用性",
  safetyLabel: "安全性",
  evaluatorsLabel: "評価者",
  rankTest: "順位検定",
  rankTestOmitted: "順位検定は省略",
  emptyDashboard: "評価レポートがありません。",
  emptyManuals: "マニュアルが未登録です。",
  requestFailed: "リクエストに失敗しました。",
  retry: "再試行",
  dismiss: "閉じる",
  safetyNoticeTitle: "安全上の注意",
  sectionCount: (n) => `全${n}節`,
  versionLabel: (v) => `第${v}版`,
};

export function detectLocale(language: string): UiLocale {
  return language.toLowerCase().startsWith("ja") ? "ja" : "en";
}

export function strings(locale: UiLocale): Strings {
  return locale === "ja" ? JA : EN;
}
