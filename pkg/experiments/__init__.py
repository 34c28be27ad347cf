"""
실험: 지표, 스윕, 결과 표, 데이터셋
"""
