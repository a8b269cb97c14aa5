/** HTML renderers for the page's panels. Pure string-in string-out so they
 * can be tested without a DOM; main.ts assigns the output to innerHTML. */

import type { Notice } from "./state.js";
import type { NotificationRecord, RouteResponse, RuleDocument } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function formatMeters(value: number): string {
  return value >= 1000 ? `${(value / 1000).toFixed(1)} km` : `${Math.round(value)} m`;
}

/** The result panel: summary always, the directions list unless compact. */
export function renderResult(result: RouteResponse, compact: boolean): string {
  if (result.no_route || result.cost === null) {
    return '<div class="banner no-route">No route found between those points.</div>';
  }
  const parts: string[] = [];
  parts.push(
    `<div class="route-summary">Total cost ${result.cost.toFixed(1)}, ` +
      `${result.segments.length} road segment${result.segments.length === 1 ? "" : "s"}.</div>`,
  );
  const snapNote = result.snap.origin_m + result.snap.destination_m;
  if (snapNote > 0.5) {
    parts.push(
      `<div class="snap-note">Snapped ${formatMeters(result.snap.origin_m)} at the start, ` +
        `${formatMeters(result.snap.destination_m)} at the end.</div>`,
    );
  }
  if (!compact && result.steps !== undefined) {
    const rows = result.steps
      .map(
        (step) =>
          `<li class="step step-${step.instruction.toLowerCase()}">` +
          `<span class="instruction">${escapeHtml(step.instruction)}</span> ` +
          `<span class="road">${escapeHtml(step.road_name)}</span> ` +
          `<span class="distance">${formatMeters(step.distance_m)}</span></li>`,
      )
      .join("");
    parts.push(`<section class="directions"><ol>${rows}</ol></section>`);
  }
  return parts.join("\n");
}

export function renderNotice(notice: Notice | null): string {
  if (notice === null) {
    return "";
  }
  if (notice.kind === "login") {
    return (
      `<div class="banner login-prompt">${escapeHtml(notice.message)} ` +
      '<button type="button" data-action="show-login">Log in</button></div>'
    );
  }
  return `<div class="banner ${notice.kind === "noRoute" ? "no-route" : notice.kind}">` +
    `${escapeHtml(notice.message)}</div>`;
}

export function renderRuleList(rules: RuleDocument[]): string {
  if (rules.length === 0) {
    return '<p class="empty">No condition rules are active.</p>';
  }
  const rows = rules
    .map((rule) => {
      const extra = rule.kind === "CONGESTION" ? ` ×${rule.multiplier}` : "";
      const schedule =
        rule.schedule.kind === "WEEKLY"
          ? `${rule.schedule.weekdays.join(",")} ` +
            `${minuteLabel(rule.schedule.start_minute)}-${minuteLabel(rule.schedule.end_minute)}`
          : `from ${rule.schedule.start_at}${rule.schedule.end_at ? ` to ${rule.schedule.end_at}` : ""}`;
      return (
        `<li data-rule="${rule.id}">#${rule.id} segment ${rule.segment_id}: ` +
        `${escapeHtml(rule.kind)}${extra} (${escapeHtml(schedule)}) ` +
        `<button type="button" data-action="delete-rule" data-rule-id="${rule.id}">remove</button></li>`
      );
    })
    .join("");
  return `<ul class="rule-list">${rows}</ul>`;
}

function minuteLabel(minute: number): string {
  const h = Math.floor(minute / 60);
  const m = minute % 60;
  return `${String(h).padStart(2, "0")}:${String(m).padStart(2, "0")}`;
}

/** The admin form; non-admins get nothing at all, not a disabled shell. */
export function renderRuleForm(role: string | null): string {
  if (role !== "ADMIN") {
    return "";
  }
  return `
<form class="rule-form" data-form="rule">
  <label>Rule id <input name="id" type="number" min="1" required></label>
  <label>Segment <input name="segment_id" type="number" min="1" required></label>
  <label>Kind
    <select name="kind">
      <option>CLOSED</option>
      <option>ONE_WAY_FORWARD</option>
      <option>ONE_WAY_REVERSE</option>
      <option>CONGESTION</option>
    </select>
  </label>
  <label>Multiplier <input name="multiplier" type="number" step="0.1"></label>
  <label>Schedule
    <select name="schedule_kind">
      <option>WEEKLY</option>
      <option>ABSOLUTE</option>
    </select>
  </label>
  <label>Weekdays <input name="weekdays" placeholder="Mon,Tue,Wed,Thu,Fri"></label>
  <label>Window <input name="start_minute" type="number" min="0" max="1440">
    to <input name="end_minute" type="number" min="0" max="1440"></label>
  <label>From <input name="start_at" type="datetime-local"></label>
  <label>Until <input name="end_at" type="datetime-local"></label>
  <div class="form-errors" aria-live="polite"></div>
  <button type="submit">Save rule</button>
</form>`;
}

export function renderAlerts(alerts: NotificationRecord[]): string {
  if (alerts.length === 0) {
    return '<p class="empty">No alerts.</p>';
  }
  const rows = alerts
    .map(
      (alert) =>
        `<li class="alert alert-${alert.delivery_state.toLowerCase()}">` +
        `<time>${escapeHtml(alert.created_at)}</time> ` +
        `[${escapeHtml(alert.channel)}] ${escapeHtml(alert.body)}</li>`,
    )
    .join("");
  return `<ul class="alert-list">${rows}</ul>`;
}

export function renderLoginForm(): string {
  return `
<form class="login-form" data-form="login">
  <label>Username <input name="username" autocomplete="username" required></label>
  <label>Password <input name="password" type="password" autocomplete="current-password" required></label>
  <button type="submit">Log in</button>
</form>`;
}
