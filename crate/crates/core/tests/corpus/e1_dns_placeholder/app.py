import pymysql

conn = pymysql.connect(host="your-project-name.com", user="svc", password="Kd8Vw3QzRt", database="notes_app")
cur = conn.cursor()
cur.execute("SELECT title, body FROM notes WHERE author_id = %s", (7,))
