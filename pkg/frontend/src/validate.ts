/** Client-side rule validation, mirroring what the server enforces, so the
 * admin form can flag mistakes before any request goes out. */

import type { RuleDocument } from "./types.js";

const KINDS = ["CLOSED", "ONE_WAY_FORWARD", "ONE_WAY_REVERSE", "CONGESTION"];
const WEEKDAYS = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];

export function validateRule(rule: RuleDocument, knownSegments: Set<number>): string[] {
  const errors: string[] = [];
  if (!Number.isInteger(rule.id) || rule.id <= 0) {
    errors.push("rule id must be a positive integer");
  }
  if (!knownSegments.has(rule.segment_id)) {
    errors.push(`unknown segment ${rule.segment_id}`);
  }
  if (!KINDS.includes(rule.kind)) {
    errors.push(`kind must be one of ${KINDS.join(", ")}`);
  }
  if (rule.kind === "CONGESTION") {
    if (typeof rule.multiplier !== "number" || !(rule.multiplier > 1)) {
      errors.push("congestion rules need a multiplier greater than 1");
    }
  } else if (rule.multiplier !== undefined) {
    errors.push("only congestion rules carry a multiplier");
  }
  errors.push(...validateSchedule(rule));
  return errors;
}

function validateSchedule(rule: RuleDocument): string[] {
  const errors: string[] = [];
  const schedule = rule.schedule;
  if (!schedule || typeof schedule !== "object") {
    return ["rule needs a schedule"];
  }
  if (schedule.kind === "WEEKLY") {
    if (!Array.isArray(schedule.weekdays) || schedule.weekdays.length === 0) {
      errors.push("weekly schedules need at least one weekday");
    } else {
      for (const day of schedule.weekdays) {
        if (!WEEKDAYS.includes(day)) {
          errors.push(`unknown weekday ${JSON.stringify(day)}`);
        }
      }
    }
    for (const [label, minute] of [
      ["start_minute", schedule.start_minute],
      ["end_minute", schedule.end_minute],
    ] as const) {
      if (!Number.isInteger(minute) || minute < 0 || minute > 1440) {
        errors.push(`${label} must be a whole minute between 0 and 1440`);
      }
    }
    if (schedule.start_minute === schedule.end_minute) {
      errors.push("weekly window must not be empty");
    }
  } else if (schedule.kind === "ABSOLUTE") {
    const start = Date.parse(schedule.start_at);
    if (Number.isNaN(start)) {
      errors.push("start_at must be an ISO-8601 datetime");
    }
    if (schedule.end_at !== undefined) {
      const end = Date.parse(schedule.end_at);
      if (Number.isNaN(end)) {
        errors.push("end_at must be an ISO-8601 datetime");
      } else if (!Number.isNaN(start) && end <= start) {
        errors.push("end_at must be after start_at");
      }
    }
  } else {
    errors.push("schedule kind must be WEEKLY or ABSOLUTE");
  }
  return errors;
}
