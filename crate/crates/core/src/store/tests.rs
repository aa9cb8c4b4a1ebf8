use chrono::NaiveDate;

use super::*;
use crate::model::{QuestionCard, RehearsalStage, ThemeCategory};

fn d(day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2025, 3, day).unwrap()
}

fn qs(tag: &str) -> QuestionSet {
    QuestionSet {
        cards: (0..3)
            .map(|i| QuestionCard {
                text: format!("What does the character want {tag} {i}?"),
                theme: ThemeCategory::Unlabeled,
                generated_at: Timestamp(0),
            })
            .collect(),
        context_fingerprint: "fp".into(),
    }
}

fn participant(id: &str, sequence: Sequence) -> Participant {
    let pid = ParticipantId::new(id);
    Participant {
        participant_id: pid.clone(),
        token: format!("tok-{id}"),
        production: ProductionContext {
            script_id: "sc".into(),
            role_name: "Nora".into(),
            stage: RehearsalStage::SceneDetail,
            d_day: d(30),
        },
        schedule: StudySchedule::new(pid, sequence, d(1)),
        profile: CharacterProfile {
            role: RoleProfile {
                script_id: "sc".into(),
                name: "Nora".into(),
                description: "wife".into(),
            },
            profile_text: "profile".into(),
            generated_at: Timestamp(0),
        },
    }
}

fn store_with(p: &Participant) -> Store {
    let s = Store::in_memory();
    s.setup_participant(p.clone()).unwrap();
    s
}

fn draft(text: &str, sel: Option<u8>) -> EntryDraft {
    EntryDraft {
        text: text.into(),
        selected_index: sel,
        ..Default::default()
    }
}

#[test]
fn condition_follows_schedule() {
    let p = participant("p1", Sequence::EarlyAi);
    let s = store_with(&p);
    let pid = &p.participant_id;
    // Baseline day rejects questions, treatment day requires them.
    assert!(matches!(
        s.open_session("s1".into(), pid, d(1), Some(qs("a")), Timestamp(0)),
        Err(StoreError::ConditionMismatch { .. })
    ));
    assert!(matches!(
        s.open_session("s2".into(), pid, d(3), None, Timestamp(0)),
        Err(StoreError::ConditionMismatch {
            expected: Condition::AiAssisted,
            ..
        })
    ));
    assert!(matches!(
        s.open_session("s3".into(), pid, d(15), None, Timestamp(0)),
        Err(StoreError::OutOfStudyWindow(_))
    ));
    let log = s.open_session("s4".into(), pid, d(9), None, Timestamp(0)).unwrap();
    assert_eq!(log.condition, Condition::Unassisted);
}

#[test]
fn keystroke_then_save_sets_timings() {
    let p = participant("p1", Sequence::EarlyAi);
    let s = store_with(&p);
    let sid = SessionId::new("s1");
    s.open_session(sid.clone(), &p.participant_id, d(3), Some(qs("a")), Timestamp(1_000))
        .unwrap();
    assert!(matches!(
        s.record_first_keystroke(&sid, Timestamp(999)),
        Err(StoreError::ClockSkew { .. })
    ));
    let log = s.record_first_keystroke(&sid, Timestamp(4_000)).unwrap();
    assert_eq!(log.start_delay_ms, Some(3_000));
    // Second keystroke is ignored.
    let again = s.record_first_keystroke(&sid, Timestamp(9_000)).unwrap();
    assert_eq!(again.start_delay_ms, Some(3_000));

    let e = s.save_entry(&sid, draft("Tonight I felt it.", Some(1)), "e1".into(), Timestamp(61_000)).unwrap();
    assert_eq!(e.selected_question.as_deref(), Some("What does the character want a 1?"));
    let log = s.session(&sid).unwrap();
    assert_eq!(log.duration_ms, Some(60_000));
    assert!(log.violations().is_empty());
    assert!(matches!(
        s.save_entry(&sid, draft("again", None), "e2".into(), Timestamp(70_000)),
        Err(StoreError::SessionClosed(_))
    ));
    assert!(matches!(
        s.record_first_keystroke(&SessionId::new("nope"), Timestamp(0)),
        Err(StoreError::SessionNotFound(_))
    ));
}

#[test]
fn save_never_precedes_keystroke() {
    let p = participant("p1", Sequence::EarlyAi);
    let s = store_with(&p);
    let sid = SessionId::new("s1");
    s.open_session(sid.clone(), &p.participant_id, d(1), None, Timestamp(100)).unwrap();
    s.record_first_keystroke(&sid, Timestamp(500)).unwrap();
    s.save_entry(&sid, draft("x", None), "e".into(), Timestamp(300)).unwrap();
    let log = s.session(&sid).unwrap();
    assert_eq!(log.saved_at, Some(Timestamp(500)));
    assert!(log.duration_ms >= log.start_delay_ms);
}

#[test]
fn save_rejects_bad_drafts() {
    let p = participant("p1", Sequence::EarlyAi);
    let s = store_with(&p);
    let ai = SessionId::new("ai");
    let un = SessionId::new("un");
    s.open_session(ai.clone(), &p.participant_id, d(3), Some(qs("a")), Timestamp(0)).unwrap();
    s.open_session(un.clone(), &p.participant_id, d(2), None, Timestamp(0)).unwrap();
    assert!(matches!(
        s.save_entry(&ai, draft("   ", None), "e".into(), Timestamp(1)),
        Err(StoreError::EmptyText)
    ));
    assert!(matches!(
        s.save_entry(&ai, draft("x", Some(3)), "e".into(), Timestamp(1)),
        Err(StoreError::BadSelection(3))
    ));
    assert!(matches!(
        s.save_entry(&un, draft("x", Some(0)), "e".into(), Timestamp(1)),
        Err(StoreError::BadSelection(0))
    ));
    // An edit flag without a selection is meaningless and is dropped.
    let mut dr = draft("x", None);
    dr.edited = true;
    s.save_entry(&un, dr, "e".into(), Timestamp(1)).unwrap();
    assert!(!s.session(&un).unwrap().edited);
}

#[test]
fn edited_question_text_is_kept() {
    let p = participant("p1", Sequence::EarlyAi);
    let s = store_with(&p);
    let sid = SessionId::new("s");
    s.open_session(sid.clone(), &p.participant_id, d(4), Some(qs("a")), Timestamp(0)).unwrap();
    let dr = EntryDraft {
        text: "body".into(),
        selected_index: Some(0),
        edited: true,
        question_text: Some("My own version?".into()),
    };
    let e = s.save_entry(&sid, dr, "e".into(), Timestamp(5)).unwrap();
    assert_eq!(e.selected_question.as_deref(), Some("My own version?"));
    assert!(s.session(&sid).unwrap().edited);
}

#[test]
fn archive_order_and_updates() {
    let p = participant("p1", Sequence::EarlyAi);
    let s = store_with(&p);
    for (i, t) in [(1u32, 10i64), (2, 30), (9, 30)] {
        let sid = SessionId::new(format!("s{i}"));
        s.open_session(sid.clone(), &p.participant_id, d(i), None, Timestamp(0)).unwrap();
        s.save_entry(&sid, draft("t", None), EntryId::new(format!("e{i}")), Timestamp(t))
            .unwrap();
    }
    let ids: Vec<_> = s
        .list_archive(&p.participant_id)
        .into_iter()
        .map(|e| e.entry_id.0)
        .collect();
    assert_eq!(ids, ["e9", "e2", "e1"]);
    assert!(s.list_archive(&"other".into()).is_empty());

    let e = s.update_entry(&"e1".into(), "t".into(), Timestamp(5)).unwrap();
    assert_eq!(e.updated_at, Timestamp(11));
    assert_eq!(e.created_at, Timestamp(10));
    let e = s.update_entry(&"e1".into(), "new".into(), Timestamp(100)).unwrap();
    assert_eq!((e.final_text.as_str(), e.updated_at), ("new", Timestamp(100)));
    assert!(matches!(
        s.update_entry(&"zz".into(), "x".into(), Timestamp(0)),
        Err(StoreError::EntryNotFound(_))
    ));
}

#[test]
fn history_is_recent_first_and_per_role() {
    let p = participant("p1", Sequence::EarlyAi);
    let s = store_with(&p);
    let sid = SessionId::new("s");
    s.open_session(sid.clone(), &p.participant_id, d(3), Some(qs("a")), Timestamp(0)).unwrap();
    s.replace_questions(&sid, qs("b")).unwrap();
    let h = s.recent_questions(&p.participant_id, "Nora", 60);
    assert_eq!(h.len(), 6);
    assert_eq!(h[0], "what does the character want b 2?".trim_end_matches('?'));
    assert_eq!(s.recent_questions(&p.participant_id, "Nora", 2).len(), 2);
    assert!(s.recent_questions(&p.participant_id, "Helmer", 60).is_empty());
}

#[test]
fn replace_questions_rules() {
    let p = participant("p1", Sequence::EarlyAi);
    let s = store_with(&p);
    let un = SessionId::new("un");
    s.open_session(un.clone(), &p.participant_id, d(1), None, Timestamp(0)).unwrap();
    assert!(matches!(s.replace_questions(&un, qs("x")), Err(StoreError::NoQuestions(_))));
}

#[test]
fn schedule_locked_once_sessions_exist() {
    let p = participant("p1", Sequence::EarlyAi);
    let s = store_with(&p);
    s.setup_participant(p.clone()).unwrap();
    s.open_session("s".into(), &p.participant_id, d(1), None, Timestamp(0)).unwrap();
    let mut changed = p.clone();
    changed.schedule.sequence = Sequence::LateAi;
    assert!(matches!(s.setup_participant(changed), Err(StoreError::ScheduleLocked(_))));
    let mut new_stage = p.clone();
    new_stage.production.stage = RehearsalStage::RunThrough;
    s.setup_participant(new_stage).unwrap();
}

#[test]
fn export_rows_sorted_and_complete() {
    let a = participant("a", Sequence::LateAi);
    let b = participant("b", Sequence::EarlyAi);
    let s = store_with(&b);
    s.setup_participant(a.clone()).unwrap();
    s.open_session("b3".into(), &b.participant_id, d(3), Some(qs("q")), Timestamp(0)).unwrap();
    s.open_session("a9".into(), &a.participant_id, d(9), Some(qs("q")), Timestamp(0)).unwrap();
    s.open_session("a1".into(), &a.participant_id, d(1), None, Timestamp(0)).unwrap();
    s.save_entry(&"b3".into(), draft("one two three", Some(2)), "e".into(), Timestamp(2_500))
        .unwrap();
    let rows = s.export_rows();
    let ids: Vec<_> = rows.iter().map(|r| r.session_id.as_str()).collect();
    assert_eq!(ids, ["a1", "a9", "b3"]);
    let b3 = &rows[2];
    assert_eq!((b3.study_day, b3.period), (3, 2));
    assert_eq!(b3.condition, Condition::AiAssisted);
    assert_eq!(b3.word_count, 3);
    assert_eq!(b3.duration_s, Some(2.5));
    assert_eq!(b3.q3.as_deref(), Some("What does the character want q 2?"));
    assert_eq!(rows[1].period, 3);
    assert!(!rows[0].is_saved());
    let csv = s.export_logs(ExportFormat::Csv);
    assert_eq!(export::decode(&csv, ExportFormat::Csv).unwrap(), rows);
}

#[test]
fn wal_replays_and_tolerates_torn_tail() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("store.jsonl");
    let p = participant("p1", Sequence::EarlyAi);
    {
        let s = Store::open(&path).unwrap();
        s.setup_participant(p.clone()).unwrap();
        s.open_session("s".into(), &p.participant_id, d(3), Some(qs("a")), Timestamp(0)).unwrap();
        s.record_first_keystroke(&"s".into(), Timestamp(10)).unwrap();
        s.save_entry(&"s".into(), draft("text", Some(0)), "e".into(), Timestamp(20)).unwrap();
        s.add_warnings(
            &"s".into(),
            vec![GenerationWarning::DuplicateAfterRetries { colliding: vec!["x".into()] }],
        )
        .unwrap();
    }
    let before = Store::open(&path).unwrap().export_rows();
    assert_eq!(before.len(), 1);
    assert_eq!(before[0].start_delay_ms, Some(10));

    // Simulate a crash mid-append.
    let mut bytes = std::fs::read(&path).unwrap();
    bytes.extend_from_slice(b"{\"op\":\"keystr");
    std::fs::write(&path, &bytes).unwrap();
    let s = Store::open(&path).unwrap();
    assert_eq!(s.export_rows(), before);
    assert_eq!(s.warnings(&"s".into()).len(), 1);
    assert_eq!(s.recent_questions(&p.participant_id, "Nora", 60).len(), 3);
    s.update_entry(&"e".into(), "later".into(), Timestamp(50)).unwrap();
    drop(s);
    let s = Store::open(&path).unwrap();
    assert_eq!(s.entry(&"e".into()).unwrap().final_text, "later");
}

#[test]
fn wal_rejects_corruption_in_the_middle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("store.jsonl");
    {
        let s = Store::open(&path).unwrap();
        s.setup_participant(participant("p1", Sequence::EarlyAi)).unwrap();
    }
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, format!("garbage\n{text}")).unwrap();
    assert!(matches!(Store::open(&path), Err(StoreError::Corrupt { .. })));
    assert!(Store::open(&dir.path().join("missing/dir/x.jsonl")).is_err());
}
